// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "tableprog/tensor.hpp"

namespace tqp::train {

// Rescales the gradient set to global norm max_norm when it exceeds it.
// Returns the pre-clip norm.
double clip_global_norm(std::vector<ad::Tensor>& grads, double max_norm);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
};

class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig cfg, const std::vector<ad::Tensor*>& params);

  void step(const std::vector<ad::Tensor*>& params,
            const std::vector<ad::Tensor>& grads);

  // exposed for checkpointing
  AdamConfig cfg;
  std::vector<ad::Tensor> m, v;
  int64_t steps = 0;
};

}  // namespace tqp::train
