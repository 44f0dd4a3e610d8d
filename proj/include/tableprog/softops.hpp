// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "tableprog/graph.hpp"
#include "tableprog/masks.hpp"
#include "tableprog/ops.hpp"

namespace tqp::exec {

// Expectation semantics for the operation set, built as graph nodes so the
// whole program is differentiable. Which masks apply is fixed per question;
// the executor wires them into a given graph once and is then stepped with
// the selector distributions.
//
// Per timestep, with rs = row selector from the previous step:
//   row selector update: sum over column ops j of
//       a_col(j) * a_op(op) * mask_op[i][j]
//     plus a_op(previous/next/reset/first/last) * positional output,
//     with count and print contributing nothing;
//   scalar answer  = a_op(count) * sum(rs);
//   lookup answer  = a_op(print) * outer(rs, a_col).
class SoftExecutor {
 public:
  SoftExecutor(ad::Graph& g, const ExecMasks& masks);

  int64_t rows() const { return rows_; }
  int64_t cols() const { return cols_; }

  ad::Node* initial_selector();  // all ones
  ad::Node* step_selector(ad::Node* rs_prev, ad::Node* alpha_op,
                          ad::Node* alpha_col);
  ad::Node* scalar_answer(ad::Node* rs_prev, ad::Node* alpha_op);
  ad::Node* lookup_answer(ad::Node* rs_prev, ad::Node* alpha_op,
                          ad::Node* alpha_col);

  // individual soft operations (shared by step_selector)
  ad::Node* op_count(ad::Node* rs_prev);
  ad::Node* op_superlative(OpId kind, ad::Node* rs_prev, int64_t column);
  ad::Node* op_positional(OpId kind, ad::Node* rs_prev);
  ad::Node* select_mask() { return select_; }
  ad::Node* mfe_mask() { return mfe_; }
  ad::Node* comparison_mask(OpId kind);

 private:
  ad::Graph& g_;
  int64_t rows_ = 0, cols_ = 0;
  ad::Node* select_ = nullptr;
  ad::Node* mfe_ = nullptr;
  ad::Node* gt_ = nullptr;
  ad::Node* lt_ = nullptr;
  ad::Node* ge_ = nullptr;
  ad::Node* le_ = nullptr;
  std::vector<ad::Node*> lt_mat_, gt_mat_;   // per numeric column, else null
  std::vector<ad::Node*> present_col_;       // [M] per numeric column
  ad::Node* first_mat_ = nullptr;  // strictly-lower triangular ones
  ad::Node* last_mat_ = nullptr;   // strictly-upper triangular ones
  ad::Node* prev_mat_ = nullptr;   // shift up
  ad::Node* next_mat_ = nullptr;   // shift down
  ad::Node* ones_ = nullptr;
};

}  // namespace tqp::exec
