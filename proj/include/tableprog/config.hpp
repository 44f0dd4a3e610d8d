// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tableprog/loss.hpp"
#include "tableprog/model.hpp"
#include "tableprog/optimizer.hpp"

namespace tqp {

// Flat key=value run configuration. A run is reproducible from
// (config, seed, dataset).
struct RunConfig {
  // model
  int64_t d = 256;
  int64_t T = 4;
  double keep_input = 0.8;
  double keep_recurrent = 0.9;
  double keep_word = 0.9;
  bool match_feature = true;
  bool anonymize = true;

  // loss
  double lookup_scale = 50.0;
  double scalar_skip_threshold = 10.0;
  double softmin_tau = 1.0;
  double weight_decay = 1e-4;

  // optimizer
  double clip_norm = 1.0;
  double adam_lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-6;
  int64_t batch_size = 20;

  // run
  uint64_t seed = 1;
  int64_t max_rows = 100;   // training-time table row cap
  int64_t min_count = 10;   // vocabulary threshold
  int64_t epochs = 50;
  int64_t patience = 10;    // early stopping, in dev evaluations
  double stop_at_dev_accuracy = 1.0;  // stop once reached

  // paths
  std::string dataset;      // manifest path
  std::string train_split = "train";
  std::string dev_split = "dev";
  std::string checkpoint_dir = "checkpoints";
  std::string log_path = "metrics.jsonl";
  std::string resume_from;  // optional checkpoint to continue from

  model::ModelConfig model_config() const;
  train::LossConfig loss_config() const;
  train::AdamConfig adam_config() const;

  // empty result means valid; otherwise one message per offending field
  std::vector<std::string> validate() const;

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  std::string serialize() const;

  static RunConfig load(const std::string& path);
  void save(const std::string& path) const;
  static RunConfig parse(const std::string& text);
};

}  // namespace tqp
