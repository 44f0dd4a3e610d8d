// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "tableprog/masks.hpp"
#include "tableprog/ops.hpp"
#include "tableprog/table.hpp"

namespace tqp::exec {

// Discrete execution trace. row_selectors[t] is the selector after step t
// (row_selectors[0] is the initial all-ones state).
struct HardTrace {
  std::vector<std::vector<double>> row_selectors;
  double scalar = 0.0;
  ad::Tensor lookup;  // MxC, set by a final print
  tbl::Answer answer;
};

// Runs a program with one-hot selections. The final answer is the scalar
// when the last operation is count, the cells with lookup value 1 when it
// is print, and "no answer" otherwise. A count or print in the middle of a
// program zeroes the row selector: neither contributes to it.
HardTrace run_program_hard(const Program& program, const tbl::Table& table,
                           const tbl::MatchResult& match,
                           const PivotSet& pivots);

}  // namespace tqp::exec
