// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "tableprog/model.hpp"
#include "tableprog/optimizer.hpp"
#include "tableprog/text.hpp"

namespace tqp {

// Single-file checkpoint: a text manifest (version, model settings,
// vocabulary, tensor table with name/shape/offset) followed by the raw
// little-endian 64-bit float payload. Loading validates every tensor shape
// against the recorded dimensions.
struct Checkpoint {
  static constexpr int kVersion = 1;

  model::ModelConfig model_cfg;
  tbl::Vocabulary vocab;
  model::ModelParams params;

  // optional trainer state, for resuming
  bool has_trainer_state = false;
  train::Adam adam;
  int64_t next_epoch = 0;
  double best_dev = -1.0;
  int64_t best_epoch = -1;
  int64_t evals_since_improvement = 0;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace tqp
