// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tableprog/graph.hpp"
#include "tableprog/table.hpp"

namespace tqp::train {

struct LossConfig {
  double lookup_scale = 50.0;         // L_lookup multiplier
  double scalar_skip_threshold = 10.0;  // applied after the divide-by-M
  double softmin_tau = 1.0;
  double weight_decay = 1e-4;
  double lookup_clamp = 1e-12;
};

// Where a weak answer can live in the table. For an entries answer,
// match_sets[i] holds every cell equal to item i; for a number answer that
// also occurs in the table, match_sets has a single set with the matching
// numeric cells.
struct AnswerTarget {
  tbl::Answer answer;
  int64_t rows = 0, cols = 0;
  bool number_in_table = false;
  std::vector<std::vector<std::pair<int64_t, int64_t>>> match_sets;
  ad::Tensor g;  // MxC, union of the match sets
  bool trainable = true;  // false when some entries item matches no cell
};

AnswerTarget prepare_target(const tbl::Answer& answer, const tbl::Table& table);

struct ScalarLoss {
  ad::Node* loss = nullptr;
  bool skip = false;  // true: no gradient may flow from this example
};

// L = (scalar_T - y)^2 / (2 M); skip when L exceeds the threshold.
ScalarLoss loss_scalar(ad::Graph& g, ad::Node* scalar_T, double y, int64_t rows,
                       const LossConfig& cfg);

// sum_i min_{(r,c) in S_i} -log lookup[r,c]
//   - 1/(MC) * sum_{g=0} log(1 - lookup[i,j])
// Probabilities are clamped to [clamp, 1-clamp] before the logs; gradient
// flows only through each item's argmin entry and the negative entries.
ad::Node* loss_lookup(ad::Graph& g, ad::Node* lookup_T,
                      const AnswerTarget& target, const LossConfig& cfg);

// softmax(-a/tau, -b/tau)-weighted average; lies between min and max.
ad::Node* soft_min(ad::Graph& g, ad::Node* a, ad::Node* b, double tau);

struct TotalLoss {
  ad::Node* loss = nullptr;  // null when skipped
  bool skipped = false;
  bool used_scalar = false, used_lookup = false;
};

// Branches: entries answer -> scale * L_lookup; number answer not in the
// table -> L_scalar; number answer present in the table -> soft minimum of
// the two. Adds lambda/2 * sum ||p||^2 when weight decay is on. A skip
// zeroes the whole example's contribution.
TotalLoss total_loss(ad::Graph& g, ad::Node* scalar_T, ad::Node* lookup_T,
                     const AnswerTarget& target, const LossConfig& cfg,
                     std::span<ad::Node* const> params);

}  // namespace tqp::train
