// SPDX-License-Identifier: Apache-2.0
#include "tableprog/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <stdexcept>

namespace tqp::tbl {

namespace {

bool is_word_char(unsigned char c) {
  return std::isalnum(c) || c >= 0x80;  // pass non-ASCII bytes through
}

// ^[0-9][0-9,]*(\.[0-9]+)?$ with commas stripped
std::optional<double> number_from_word(const std::string& w) {
  if (w.empty() || !std::isdigit(static_cast<unsigned char>(w[0])))
    return std::nullopt;
  std::string digits;
  bool seen_dot = false;
  for (char c : w) {
    if (c == ',') continue;
    if (c == '.') {
      if (seen_dot) return std::nullopt;
      seen_dot = true;
      digits += c;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    digits += c;
  }
  if (digits.empty() || digits.back() == '.') return std::nullopt;
  return std::strtod(digits.c_str(), nullptr);
}

Token make_token(const std::string& w) {
  if (auto num = number_from_word(w)) {
    Token t;
    t.text = number_to_string(*num);
    t.is_number = true;
    t.value = *num;
    return t;
  }
  return Token{w, false, 0.0};
}

}  // namespace

std::string number_to_string(double x) {
  if (std::isfinite(x) && x == std::floor(x) && std::fabs(x) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", x);
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

std::vector<Token> tokenize(const std::string& raw) {
  std::vector<Token> out;
  std::string word;
  auto flush = [&]() {
    if (!word.empty()) {
      out.push_back(make_token(word));
      word.clear();
    }
  };
  for (size_t i = 0; i < raw.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(raw[i]);
    if (std::isspace(c)) {
      flush();
    } else if (is_word_char(c)) {
      word += static_cast<char>(std::tolower(c));
    } else if ((c == ',' || c == '.') && !word.empty() && i + 1 < raw.size() &&
               std::isdigit(static_cast<unsigned char>(word[0])) &&
               std::isdigit(static_cast<unsigned char>(raw[i + 1]))) {
      word += static_cast<char>(c);  // digit group separator or decimal point
    } else {
      flush();
      out.push_back(Token{std::string(1, static_cast<char>(std::tolower(c))),
                          false, 0.0});
    }
  }
  flush();
  return out;
}

std::string normalize_phrase(const std::string& raw) {
  std::string out;
  for (const Token& t : tokenize(raw)) {
    if (!out.empty()) out += ' ';
    out += t.text;
  }
  return out;
}

std::optional<double> parse_number(const std::string& raw) {
  std::vector<Token> toks = tokenize(raw);
  if (toks.size() == 1 && toks[0].is_number) return toks[0].value;
  // allow a leading sign, which the tokenizer splits off
  if (toks.size() == 2 && !toks[0].is_number && toks[1].is_number &&
      (toks[0].text == "-" || toks[0].text == "+")) {
    return toks[0].text == "-" ? -toks[1].value : toks[1].value;
  }
  return std::nullopt;
}

Vocabulary::Vocabulary() {
  tokens_ = {kUnkToken, kMatchToken};
  token_ids_[kUnkToken] = kUnkId;
  token_ids_[kMatchToken] = kMatchId;
}

Vocabulary Vocabulary::build(const std::vector<Example>& training,
                             int64_t min_count) {
  if (min_count < 1) throw std::invalid_argument("build_vocab: min_count < 1");
  if (training.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::map<std::string, int64_t> freq;
  for (const Example& ex : training)
    for (const Token& t : ex.question) ++freq[t.text];
  Vocabulary v;
  for (const auto& [tok, count] : freq) {
    if (count < min_count) continue;
    if (v.token_ids_.count(tok)) continue;
    v.token_ids_[tok] = static_cast<int64_t>(v.tokens_.size());
    v.tokens_.push_back(tok);
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != kUnkToken || tokens[1] != kMatchToken)
    throw std::runtime_error("vocabulary token list missing reserved tokens");
  Vocabulary v;
  v.tokens_.clear();
  v.token_ids_.clear();
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (v.token_ids_.count(tokens[i]))
      throw std::runtime_error("vocabulary token list has duplicates");
    v.token_ids_[tokens[i]] = static_cast<int64_t>(i);
    v.tokens_.push_back(tokens[i]);
  }
  return v;
}

int64_t Vocabulary::id(const std::string& token) const {
  auto it = token_ids_.find(token);
  return it == token_ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return token_ids_.count(token) != 0;
}

MatchResult match_and_anonymize(const std::vector<Token>& question,
                                const Table& table) {
  const int64_t M = table.rows, C = table.num_cols();
  MatchResult res;
  res.rows = M;
  res.cols = C;
  res.select.assign(static_cast<size_t>(M * C), 0);
  res.col_match.assign(static_cast<size_t>(C), 0);

  // phrase (as token texts) -> matching cells
  std::map<std::vector<std::string>, std::vector<std::pair<int64_t, int64_t>>>
      cells;
  size_t max_len = 0;
  for (int64_t j = 0; j < C; ++j) {
    const Column& col = table.cols[static_cast<size_t>(j)];
    for (int64_t i = 0; i < M; ++i) {
      const std::string& txt = col.text[static_cast<size_t>(i)];
      if (txt.empty()) continue;
      std::vector<std::string> phrase;
      for (const Token& t : tokenize(txt)) phrase.push_back(t.text);
      if (phrase.empty()) continue;
      max_len = std::max(max_len, phrase.size());
      cells[phrase].push_back({i, j});
    }
  }

  const size_t N = question.size();
  std::vector<int64_t> span_len(N, 0);  // >0 at a claimed span start
  std::vector<uint8_t> claimed(N, 0);
  std::vector<uint8_t> span_is_numeric(N, 0);

  // longest phrases first; within a length, scan left to right
  for (size_t len = std::min(max_len, N); len >= 1; --len) {
    for (size_t p = 0; p + len <= N; ++p) {
      bool free = true;
      for (size_t k = p; k < p + len; ++k)
        if (claimed[k]) free = false;
      if (!free) continue;
      std::vector<std::string> phrase;
      phrase.reserve(len);
      for (size_t k = p; k < p + len; ++k) phrase.push_back(question[k].text);
      auto it = cells.find(phrase);
      if (it == cells.end()) continue;
      for (auto [i, j] : it->second) {
        res.select[static_cast<size_t>(i * C + j)] = 1;
        res.col_match[static_cast<size_t>(j)] = 1;
      }
      bool all_numbers = true;
      for (size_t k = p; k < p + len; ++k)
        if (!question[k].is_number) all_numbers = false;
      for (size_t k = p; k < p + len; ++k) claimed[k] = 1;
      span_len[p] = static_cast<int64_t>(len);
      // number literals keep their surface form so pivots stay computable
      span_is_numeric[p] = all_numbers ? 1 : 0;
    }
  }

  for (size_t p = 0; p < N;) {
    if (span_len[p] > 0 && !span_is_numeric[p]) {
      res.anonymized.push_back(Token{kMatchToken, false, 0.0});
      p += static_cast<size_t>(span_len[p]);
    } else if (span_len[p] > 0) {
      for (size_t k = p; k < p + static_cast<size_t>(span_len[p]); ++k)
        res.anonymized.push_back(question[k]);
      p += static_cast<size_t>(span_len[p]);
    } else {
      res.anonymized.push_back(question[p]);
      ++p;
    }
  }
  return res;
}

}  // namespace tqp::tbl
