// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace tqp::tbl {

enum class ColumnKind { Numeric, Text };

// Column-major table storage. Numeric columns keep both the parsed value
// and a canonical text form (used for phrase matching and answers).
// Missing numeric cells: present=false, number=NaN, text="".
struct Column {
  std::string name;                       // raw header
  std::vector<std::string> name_tokens;   // tokenized, lowercased
  ColumnKind kind = ColumnKind::Text;
  std::vector<std::string> text;          // normalized cell text
  std::vector<double> number;             // NaN unless numeric & present
  std::vector<uint8_t> present;           // numeric cell present flag
};

struct Table {
  std::string id;
  int64_t rows = 0;
  std::vector<Column> cols;

  int64_t num_cols() const { return static_cast<int64_t>(cols.size()); }
  bool cell_present(int64_t i, int64_t j) const {
    const Column& c = cols[static_cast<size_t>(j)];
    return c.kind == ColumnKind::Text || c.present[static_cast<size_t>(i)];
  }
};

struct Answer {
  enum class Kind { Number, Entries, None };
  Kind kind = Kind::None;
  double number = 0.0;
  std::vector<std::string> entries;  // normalized strings

  static Answer make_number(double x) {
    Answer a;
    a.kind = Kind::Number;
    a.number = x;
    return a;
  }
  static Answer make_entries(std::vector<std::string> e) {
    Answer a;
    a.kind = Kind::Entries;
    a.entries = std::move(e);
    return a;
  }
  static Answer none() { return Answer{}; }
};

struct Token {
  std::string text;
  bool is_number = false;
  double value = 0.0;

  bool operator==(const Token& o) const {
    return text == o.text && is_number == o.is_number &&
           (!is_number || value == o.value);
  }
};

struct Example {
  std::string id;
  std::string raw_question;
  std::vector<Token> question;  // tokenized
  std::string table_id;
  Answer answer;
  bool unanswerable = false;  // excluded from loss, counted wrong in eval
};

// canonical number formatting shared by tokenizer, cells and answers
std::string number_to_string(double x);

}  // namespace tqp::tbl
