// SPDX-License-Identifier: Apache-2.0
#include "tableprog/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace tqp::train {

using ad::Graph;
using ad::Node;
using ad::Tensor;

AnswerTarget prepare_target(const tbl::Answer& answer, const tbl::Table& table) {
  AnswerTarget t;
  t.answer = answer;
  t.rows = table.rows;
  t.cols = table.num_cols();
  t.g = Tensor({t.rows, t.cols});

  auto add_set = [&](const std::vector<std::pair<int64_t, int64_t>>& s) {
    for (auto [r, c] : s) t.g.at(r, c) = 1.0;
    t.match_sets.push_back(s);
  };

  if (answer.kind == tbl::Answer::Kind::Number) {
    std::vector<std::pair<int64_t, int64_t>> s;
    for (int64_t j = 0; j < t.cols; ++j) {
      const tbl::Column& col = table.cols[static_cast<size_t>(j)];
      if (col.kind != tbl::ColumnKind::Numeric) continue;
      for (int64_t i = 0; i < t.rows; ++i)
        if (col.present[static_cast<size_t>(i)] &&
            col.number[static_cast<size_t>(i)] == answer.number)
          s.push_back({i, j});
    }
    t.number_in_table = !s.empty();
    if (t.number_in_table) add_set(s);
  } else if (answer.kind == tbl::Answer::Kind::Entries) {
    for (const std::string& item : answer.entries) {
      std::vector<std::pair<int64_t, int64_t>> s;
      for (int64_t j = 0; j < t.cols; ++j) {
        const tbl::Column& col = table.cols[static_cast<size_t>(j)];
        for (int64_t i = 0; i < t.rows; ++i)
          if (!col.text[static_cast<size_t>(i)].empty() &&
              col.text[static_cast<size_t>(i)] == item)
            s.push_back({i, j});
      }
      if (s.empty()) t.trainable = false;
      add_set(s);
    }
  } else {
    t.trainable = false;
  }
  return t;
}

ScalarLoss loss_scalar(Graph& g, Node* scalar_T, double y, int64_t rows,
                       const LossConfig& cfg) {
  if (!std::isfinite(y)) throw std::invalid_argument("loss_scalar: y not finite");
  Node* diff = g.sub(scalar_T, g.scalar(y));
  Node* loss = g.scale(g.mul(diff, diff), 0.5 / static_cast<double>(rows));
  ScalarLoss out;
  out.loss = loss;
  out.skip = loss->value[0] > cfg.scalar_skip_threshold;
  return out;
}

Node* loss_lookup(Graph& g, Node* lookup_T, const AnswerTarget& target,
                  const LossConfig& cfg) {
  const int64_t M = target.rows, C = target.cols;
  if (lookup_T->value.rank() != 2 || lookup_T->value.rows() != M ||
      lookup_T->value.cols() != C)
    throw std::invalid_argument("loss_lookup: lookup shape mismatch");

  Node* clamped = g.clamp(lookup_T, cfg.lookup_clamp, 1.0 - cfg.lookup_clamp);

  Node* acc = nullptr;
  for (const auto& set : target.match_sets) {
    if (set.empty())
      throw std::invalid_argument("loss_lookup: empty match set");
    // the entry with the highest probability carries the loss for this item
    std::pair<int64_t, int64_t> best = set[0];
    for (const auto& rc : set)
      if (lookup_T->value.at(rc.first, rc.second) >
          lookup_T->value.at(best.first, best.second))
        best = rc;
    Node* p = g.at(clamped, best.first * C + best.second);
    Node* term = g.neg(g.log(p));
    acc = acc ? g.add(acc, term) : term;
  }

  Tensor not_in_answer({M, C});
  for (int64_t i = 0; i < M; ++i)
    for (int64_t j = 0; j < C; ++j)
      not_in_answer.at(i, j) = target.g.at(i, j) == 0.0 ? 1.0 : 0.0;
  Node* log_neg = g.log(g.sub(g.scalar(1.0), clamped));
  Node* masked = g.mul(log_neg, g.constant(std::move(not_in_answer)));
  Node* neg_term =
      g.scale(g.sum_all(masked), -1.0 / static_cast<double>(M * C));
  return acc ? g.add(acc, neg_term) : neg_term;
}

Node* soft_min(Graph& g, Node* a, Node* b, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("soft_min: tau must be positive");
  Node* pair = g.concat(std::vector<Node*>{a, b});
  Node* w = g.softmax(g.scale(pair, -1.0 / tau));
  return g.sum_all(g.mul(w, pair));
}

TotalLoss total_loss(Graph& g, Node* scalar_T, Node* lookup_T,
                     const AnswerTarget& target, const LossConfig& cfg,
                     std::span<ad::Node* const> params) {
  TotalLoss out;
  Node* data = nullptr;

  if (target.answer.kind == tbl::Answer::Kind::Entries) {
    if (!target.trainable)
      throw std::invalid_argument("total_loss: untrainable entries target");
    data = g.scale(loss_lookup(g, lookup_T, target, cfg), cfg.lookup_scale);
    out.used_lookup = true;
  } else if (target.answer.kind == tbl::Answer::Kind::Number) {
    ScalarLoss sl =
        loss_scalar(g, scalar_T, target.answer.number, target.rows, cfg);
    if (sl.skip) {
      out.skipped = true;
      return out;
    }
    out.used_scalar = true;
    if (target.number_in_table) {
      Node* ll =
          g.scale(loss_lookup(g, lookup_T, target, cfg), cfg.lookup_scale);
      data = soft_min(g, sl.loss, ll, cfg.softmin_tau);
      out.used_lookup = true;
    } else {
      data = sl.loss;
    }
  } else {
    throw std::invalid_argument("total_loss: target has no answer");
  }

  if (cfg.weight_decay > 0.0) {
    Node* sq = nullptr;
    for (Node* p : params) {
      Node* s = g.sum_all(g.mul(p, p));
      sq = sq ? g.add(sq, s) : s;
    }
    if (sq) data = g.add(data, g.scale(sq, 0.5 * cfg.weight_decay));
  }
  out.loss = data;
  return out;
}

}  // namespace tqp::train
