// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "tableprog/ops.hpp"
#include "tableprog/table.hpp"
#include "tableprog/tensor.hpp"
#include "tableprog/text.hpp"

namespace tqp::exec {

// Per-question numeric thresholds for the four comparison operations.
struct PivotSet {
  double gt = 0.0, lt = 0.0, ge = 0.0, le = 0.0;

  double get(OpId op) const;
  void set(OpId op, double v);
  static PivotSet uniform(double v) { return PivotSet{v, v, v, v}; }
};

// Everything about a (question, table) pair that does not depend on the
// timestep: select/mfe masks, comparison masks at the given pivots, and the
// pairwise order matrices driving the superlatives. Missing numeric cells
// are excluded throughout: their indicators are 0 and they can never be
// extremal.
struct ExecMasks {
  int64_t rows = 0, cols = 0;
  ad::Tensor select;   // MxC
  ad::Tensor mfe;      // MxC
  ad::Tensor gt, lt, ge, le;        // MxC comparison indicators
  ad::Tensor numeric_present;       // MxC, 1 iff numeric column & present
  // per column, empty for text columns:
  //   lt_mat[j][i][k] = 1 iff cells present and table[i][j] < table[k][j]
  std::vector<ad::Tensor> lt_mat, gt_mat;

  static ExecMasks build(const tbl::Table& table, const tbl::MatchResult& match,
                         const PivotSet& pivots);
};

// Attention pivot: scores between a per-operation query vector and the
// question RNN states at number-token positions, softmax-normalized, then a
// weighted sum of the token values. No number tokens -> all pivots 0.
// queries is 4 x d, rows ordered (>, <, >=, <=); states are the hidden
// vectors at the number positions, aligned with values.
PivotSet compute_pivots(const std::vector<double>& values,
                        const std::vector<const ad::Tensor*>& states,
                        const ad::Tensor& queries);

}  // namespace tqp::exec
