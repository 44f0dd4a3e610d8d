// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <stdexcept>

#include "tableprog/table.hpp"
#include "tableprog/text.hpp"

using namespace tqp::tbl;

namespace {

Table two_col_table(std::vector<std::string> swimmers,
                    std::vector<std::string> times) {
  Table t;
  t.id = "t";
  t.rows = static_cast<int64_t>(swimmers.size());
  Column a;
  a.name = "swimmer";
  a.name_tokens = {"swimmer"};
  a.kind = ColumnKind::Text;
  for (auto& s : swimmers) {
    a.text.push_back(normalize_phrase(s));
    a.number.push_back(0.0 / 0.0);
    a.present.push_back(0);
  }
  Column b;
  b.name = "time";
  b.name_tokens = {"time"};
  b.kind = ColumnKind::Text;
  for (auto& s : times) {
    b.text.push_back(normalize_phrase(s));
    b.number.push_back(0.0 / 0.0);
    b.present.push_back(0);
  }
  t.cols = {a, b};
  return t;
}

std::vector<std::string> texts(const std::vector<Token>& toks) {
  std::vector<std::string> out;
  for (const Token& t : toks) out.push_back(t.text);
  return out;
}

}  // namespace

TEST_CASE("tokenizer lowercases, splits punctuation and normalizes numbers") {
  auto toks = tokenize("How many games had more than 1,500 in attendance?");
  CHECK(texts(toks) == std::vector<std::string>{"how", "many", "games", "had",
                                                "more", "than", "1500", "in",
                                                "attendance", "?"});
  CHECK(toks[6].is_number);
  CHECK(toks[6].value == 1500.0);
}

TEST_CASE("tokenizer single token and plain question") {
  CHECK(texts(tokenize("last")) == std::vector<std::string>{"last"});
  CHECK(texts(tokenize("what is the total number of teams?")) ==
        std::vector<std::string>{"what", "is", "the", "total", "number", "of",
                                 "teams", "?"});
}

TEST_CASE("tokenizer decimals and mixed punctuation") {
  auto toks = tokenize("claudia roll's time: 3.5");
  CHECK(texts(toks) == std::vector<std::string>{"claudia", "roll", "'", "s",
                                                "time", ":", "3.5"});
  CHECK(toks.back().is_number);
  CHECK(toks.back().value == 3.5);
}

TEST_CASE("vocabulary thresholds rare tokens to UNK") {
  std::vector<Example> corpus;
  for (int i = 0; i < 12; ++i) {
    Example e;
    e.question = tokenize("a");
    corpus.push_back(e);
  }
  for (int i = 0; i < 3; ++i) {
    Example e;
    e.question = tokenize("b");
    corpus.push_back(e);
  }
  Vocabulary v = Vocabulary::build(corpus, 10);
  CHECK(v.contains("a"));
  CHECK_FALSE(v.contains("b"));
  CHECK(v.id("b") == kUnkId);
  CHECK(v.id(kMatchToken) == kMatchId);

  Vocabulary v1 = Vocabulary::build(corpus, 1);
  CHECK(v1.contains("a"));
  CHECK(v1.contains("b"));

  // WikiTableQuestions-style rare word: 8 occurrences under min_count 10
  std::vector<Example> corpus2 = corpus;
  for (int i = 0; i < 8; ++i) {
    Example e;
    e.question = tokenize("outcome");
    corpus2.push_back(e);
  }
  Vocabulary v2 = Vocabulary::build(corpus2, 10);
  CHECK(v2.id("outcome") == kUnkId);

  CHECK_THROWS_AS(Vocabulary::build({}, 10), std::invalid_argument);
  CHECK_THROWS_AS(Vocabulary::build(corpus, 0), std::invalid_argument);
}

TEST_CASE("match marks all equal cells and anonymizes the phrase") {
  Table t = two_col_table({"alice brown", "claudia roll", "june kim"},
                          {"58.2", "57.1", "59.0"});
  auto q = tokenize("what was claudia roll's time?");
  MatchResult m = match_and_anonymize(q, t);
  CHECK(m.sel(1, 0) == 1);
  CHECK(m.sel(0, 0) == 0);
  CHECK(m.col_match[0] == 1);
  CHECK(m.col_match[1] == 0);
  // "claudia roll" replaced by a single placeholder
  CHECK(texts(m.anonymized) == std::vector<std::string>{
                                   "what", "was", kMatchToken, "'", "s",
                                   "time", "?"});
}

TEST_CASE("match sets every row containing the phrase") {
  Table t = two_col_table({"cuba", "brazil", "cuba", "chile"},
                          {"1", "2", "3", "4"});
  auto q = tokenize("who had more medals, cuba or brazil?");
  MatchResult m = match_and_anonymize(q, t);
  CHECK(m.sel(0, 0) == 1);
  CHECK(m.sel(2, 0) == 1);
  CHECK(m.sel(1, 0) == 1);
  CHECK(m.sel(3, 0) == 0);
}

TEST_CASE("no overlap leaves the question unchanged") {
  Table t = two_col_table({"alder"}, {"x"});
  auto q = tokenize("how many rows are there?");
  MatchResult m = match_and_anonymize(q, t);
  for (int64_t i = 0; i < t.rows; ++i)
    for (int64_t j = 0; j < t.num_cols(); ++j) CHECK(m.sel(i, j) == 0);
  CHECK(texts(m.anonymized) == texts(q));
}

TEST_CASE("anonymization is idempotent") {
  Table t = two_col_table({"claudia roll", "june kim"}, {"57.1", "58.0"});
  auto q = tokenize("what was claudia roll's time, june kim?");
  MatchResult m1 = match_and_anonymize(q, t);
  MatchResult m2 = match_and_anonymize(m1.anonymized, t);
  CHECK(texts(m2.anonymized) == texts(m1.anonymized));
  // placeholder matched nothing
  for (int64_t i = 0; i < t.rows; ++i)
    for (int64_t j = 0; j < t.num_cols(); ++j)
      CHECK(m2.sel(i, j) == 0);
}

TEST_CASE("number phrases are marked but keep their surface form") {
  Table t = two_col_table({"a", "b"}, {"x", "y"});
  t.cols[1].kind = ColumnKind::Numeric;
  t.cols[1].number = {1500.0, 2.0};
  t.cols[1].present = {1, 1};
  t.cols[1].text = {"1500", "2"};
  auto q = tokenize("more than 1,500 fans");
  MatchResult m = match_and_anonymize(q, t);
  CHECK(m.sel(0, 1) == 1);
  // the number token is still visible for pivot computation
  CHECK(texts(m.anonymized) ==
        std::vector<std::string>{"more", "than", "1500", "fans"});
  CHECK(m.anonymized[2].is_number);
}

TEST_CASE("longest match wins") {
  Table t = two_col_table({"red falcon", "falcon"}, {"x", "y"});
  auto q = tokenize("where is red falcon?");
  MatchResult m = match_and_anonymize(q, t);
  CHECK(m.sel(0, 0) == 1);   // two-token phrase claimed
  CHECK(m.sel(1, 0) == 0);   // the single token was consumed by the span
  CHECK(texts(m.anonymized) ==
        std::vector<std::string>{"where", "is", kMatchToken, "?"});
}
