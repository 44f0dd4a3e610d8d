// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tableprog/table.hpp"

namespace tqp::tbl {

// Tokenizer rules: lowercase; split on whitespace and punctuation
// (punctuation marks become single-character tokens); digit groups with
// commas are collapsed ("1,500" -> "1500"); integer/decimal literals are
// tagged as number tokens carrying their value. Dates are plain text.
std::vector<Token> tokenize(const std::string& raw);

// Normalized form used for cells and answer strings: tokens joined by a
// single space.
std::string normalize_phrase(const std::string& raw);

// parse a full string as a number the way the tokenizer would ("1,500",
// "12", "3.5"); nullopt if it is not a plain numeric literal
std::optional<double> parse_number(const std::string& raw);

constexpr int64_t kUnkId = 0;
constexpr int64_t kMatchId = 1;
inline const char* kUnkToken = "<unk>";
inline const char* kMatchToken = "<match>";

class Vocabulary {
 public:
  Vocabulary();

  // Tokens with question frequency < min_count resolve to UNK. Ids are
  // assigned in lexicographic order so rebuilds are stable.
  static Vocabulary build(const std::vector<Example>& training,
                          int64_t min_count);

  int64_t id(const std::string& token) const;
  int64_t id(const Token& t) const { return id(t.text); }
  bool contains(const std::string& token) const;
  int64_t size() const { return static_cast<int64_t>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // rebuild the map from an explicit token list (checkpoint load)
  static Vocabulary from_tokens(std::vector<std::string> tokens);

 private:
  std::vector<std::string> tokens_;           // index -> token
  std::map<std::string, int64_t> token_ids_;  // token -> index
};

// select mask plus the per-column match feature and the anonymized question
struct MatchResult {
  int64_t rows = 0, cols = 0;
  std::vector<uint8_t> select;      // row-major MxC, 1 where cell matched
  std::vector<uint8_t> col_match;   // per-column any-match flag
  std::vector<Token> anonymized;    // question with matched phrases replaced

  uint8_t sel(int64_t i, int64_t j) const {
    return select[static_cast<size_t>(i * cols + j)];
  }
};

// Marks cell (i,j) when its normalized text equals a contiguous question
// phrase. Longest phrases are claimed first, ties resolved left to right.
// Matched phrases are replaced by a single <match> token, except phrases
// consisting solely of number tokens, whose values must stay visible for
// pivot computation.
MatchResult match_and_anonymize(const std::vector<Token>& question,
                                const Table& table);

}  // namespace tqp::tbl
