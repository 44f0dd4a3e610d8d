// SPDX-License-Identifier: Apache-2.0
#include "tableprog/softops.hpp"

#include <stdexcept>

namespace tqp::exec {

using ad::Node;
using ad::Tensor;

SoftExecutor::SoftExecutor(ad::Graph& g, const ExecMasks& masks)
    : g_(g), rows_(masks.rows), cols_(masks.cols) {
  const int64_t M = rows_;
  select_ = g_.constant(masks.select);
  mfe_ = g_.constant(masks.mfe);
  gt_ = g_.constant(masks.gt);
  lt_ = g_.constant(masks.lt);
  ge_ = g_.constant(masks.ge);
  le_ = g_.constant(masks.le);

  lt_mat_.assign(static_cast<size_t>(cols_), nullptr);
  gt_mat_.assign(static_cast<size_t>(cols_), nullptr);
  present_col_.assign(static_cast<size_t>(cols_), nullptr);
  for (int64_t j = 0; j < cols_; ++j) {
    if (masks.lt_mat[static_cast<size_t>(j)].numel() == 0) continue;
    lt_mat_[static_cast<size_t>(j)] =
        g_.constant(masks.lt_mat[static_cast<size_t>(j)]);
    gt_mat_[static_cast<size_t>(j)] =
        g_.constant(masks.gt_mat[static_cast<size_t>(j)]);
    Tensor pc({M});
    for (int64_t i = 0; i < M; ++i) pc[i] = masks.numeric_present.at(i, j);
    present_col_[static_cast<size_t>(j)] = g_.constant(std::move(pc));
  }

  Tensor fm({M, M}), lm({M, M}), pm({M, M}), nm({M, M});
  for (int64_t i = 0; i < M; ++i)
    for (int64_t k = 0; k < M; ++k) {
      if (k < i) fm.at(i, k) = 1.0;
      if (k > i) lm.at(i, k) = 1.0;
      if (k == i + 1) pm.at(i, k) = 1.0;
      if (k == i - 1) nm.at(i, k) = 1.0;
    }
  first_mat_ = g_.constant(std::move(fm));
  last_mat_ = g_.constant(std::move(lm));
  prev_mat_ = g_.constant(std::move(pm));
  next_mat_ = g_.constant(std::move(nm));
  ones_ = g_.constant(Tensor::full({M}, 1.0));
}

Node* SoftExecutor::initial_selector() { return ones_; }

Node* SoftExecutor::op_count(Node* rs_prev) { return g_.sum_all(rs_prev); }

Node* SoftExecutor::comparison_mask(OpId kind) {
  switch (kind) {
    case OpId::Gt: return gt_;
    case OpId::Lt: return lt_;
    case OpId::Ge: return ge_;
    case OpId::Le: return le_;
    default: throw std::invalid_argument("not a comparison operation");
  }
}

Node* SoftExecutor::op_superlative(OpId kind, Node* rs_prev, int64_t column) {
  if (!op_is_superlative(kind))
    throw std::invalid_argument("not a superlative operation");
  Node* ord = kind == OpId::Argmax ? lt_mat_[static_cast<size_t>(column)]
                                   : gt_mat_[static_cast<size_t>(column)];
  if (!ord) return nullptr;  // text column: output is identically zero
  Node* beaten = g_.matvec(ord, rs_prev);
  Node* raw = g_.relu(g_.sub(rs_prev, beaten));
  return g_.mul(raw, present_col_[static_cast<size_t>(column)]);
}

Node* SoftExecutor::op_positional(OpId kind, Node* rs_prev) {
  switch (kind) {
    case OpId::First:
      return g_.relu(g_.sub(rs_prev, g_.matvec(first_mat_, rs_prev)));
    case OpId::Last:
      return g_.relu(g_.sub(rs_prev, g_.matvec(last_mat_, rs_prev)));
    case OpId::Previous:
      return g_.matvec(prev_mat_, rs_prev);
    case OpId::Next:
      return g_.matvec(next_mat_, rs_prev);
    case OpId::Reset:
      return ones_;
    default:
      throw std::invalid_argument("not a positional operation");
  }
}

Node* SoftExecutor::step_selector(Node* rs_prev, Node* alpha_op,
                                  Node* alpha_col) {
  auto w = [&](OpId op) { return g_.at(alpha_op, static_cast<int64_t>(op)); };

  // column-weighted mask terms: mask . alpha_col, scaled by alpha_op(op)
  Node* acc = g_.mul(g_.matvec(gt_, alpha_col), w(OpId::Gt));
  acc = g_.add(acc, g_.mul(g_.matvec(lt_, alpha_col), w(OpId::Lt)));
  acc = g_.add(acc, g_.mul(g_.matvec(ge_, alpha_col), w(OpId::Ge)));
  acc = g_.add(acc, g_.mul(g_.matvec(le_, alpha_col), w(OpId::Le)));
  acc = g_.add(acc, g_.mul(g_.matvec(select_, alpha_col), w(OpId::Select)));
  acc = g_.add(acc, g_.mul(g_.matvec(mfe_, alpha_col), w(OpId::Mfe)));

  for (OpId kind : {OpId::Argmax, OpId::Argmin}) {
    Node* sum = nullptr;
    for (int64_t j = 0; j < cols_; ++j) {
      Node* out = op_superlative(kind, rs_prev, j);
      if (!out) continue;
      Node* weighted = g_.mul(out, g_.at(alpha_col, j));
      sum = sum ? g_.add(sum, weighted) : weighted;
    }
    if (sum) acc = g_.add(acc, g_.mul(sum, w(kind)));
  }

  for (OpId kind : {OpId::Previous, OpId::Next, OpId::Reset, OpId::First,
                    OpId::Last}) {
    acc = g_.add(acc, g_.mul(op_positional(kind, rs_prev), w(kind)));
  }
  return acc;
}

Node* SoftExecutor::scalar_answer(Node* rs_prev, Node* alpha_op) {
  return g_.mul(op_count(rs_prev),
                g_.at(alpha_op, static_cast<int64_t>(OpId::Count)));
}

Node* SoftExecutor::lookup_answer(Node* rs_prev, Node* alpha_op,
                                  Node* alpha_col) {
  return g_.mul(g_.outer(rs_prev, alpha_col),
                g_.at(alpha_op, static_cast<int64_t>(OpId::Print)));
}

}  // namespace tqp::exec
