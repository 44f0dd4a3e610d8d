// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

namespace tqp::exec {

// The 15 built-in operations. The order is canonical: operation
// distributions, checkpoints and program text all use these indices.
enum class OpId : int {
  Count = 0,
  Select,
  Mfe,
  Argmax,
  Argmin,
  Gt,
  Lt,
  Ge,
  Le,
  First,
  Last,
  Previous,
  Next,
  Print,
  Reset,
};

constexpr int kNumOps = 15;

const char* op_name(OpId op);
std::optional<OpId> op_from_name(const std::string& name);
bool op_takes_column(OpId op);
bool op_is_comparison(OpId op);
bool op_is_superlative(OpId op);

struct ProgramStep {
  OpId op = OpId::Reset;
  int64_t column = -1;  // -1 when the operation takes no column
};

struct Program {
  std::vector<ProgramStep> steps;

  std::string to_text(const std::vector<std::string>& column_names = {}) const;
  bool operator==(const Program& o) const;
};

// Parses "op[:column]" steps separated by newlines or '/'. Column names are
// resolved against `column_names` when given, otherwise a numeric index is
// required. Throws std::invalid_argument with the offending step position.
Program parse_program(const std::string& text,
                      const std::vector<std::string>& column_names = {});

}  // namespace tqp::exec
