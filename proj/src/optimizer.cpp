// SPDX-License-Identifier: Apache-2.0
#include "tableprog/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace tqp::train {

double clip_global_norm(std::vector<ad::Tensor>& grads, double max_norm) {
  if (max_norm <= 0.0)
    throw std::invalid_argument("clip_global_norm: max_norm must be positive");
  double sq = 0.0;
  for (const ad::Tensor& g : grads)
    for (double x : g.v) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (ad::Tensor& g : grads)
      for (double& x : g.v) x *= s;
  }
  return norm;
}

Adam::Adam(AdamConfig c, const std::vector<ad::Tensor*>& params) : cfg(c) {
  for (const ad::Tensor* p : params) {
    m.push_back(ad::Tensor::zeros(p->shape));
    v.push_back(ad::Tensor::zeros(p->shape));
  }
}

void Adam::step(const std::vector<ad::Tensor*>& params,
                const std::vector<ad::Tensor>& grads) {
  if (params.size() != m.size() || grads.size() != m.size())
    throw std::invalid_argument("adam: parameter/gradient count mismatch");
  ++steps;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(steps));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(steps));
  for (size_t k = 0; k < params.size(); ++k) {
    ad::Tensor& p = *params[k];
    const ad::Tensor& g = grads[k];
    for (int64_t i = 0; i < p.numel(); ++i) {
      m[k][i] = cfg.beta1 * m[k][i] + (1.0 - cfg.beta1) * g[i];
      v[k][i] = cfg.beta2 * v[k][i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[k][i] / bc1;
      const double vhat = v[k][i] / bc2;
      p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace tqp::train
