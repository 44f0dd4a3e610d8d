// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tableprog/checkpoint.hpp"
#include "tableprog/config.hpp"
#include "tableprog/dataset.hpp"
#include "tableprog/loss.hpp"
#include "tableprog/model.hpp"
#include "tableprog/optimizer.hpp"

namespace tqp::train {

struct EpochStats {
  int64_t epoch = 0;
  double train_loss = 0.0;  // mean over contributing examples
  double dev_accuracy = 0.0;
  double lr = 0.0;
  int64_t skipped_examples = 0;
};

struct TrainResult {
  std::vector<EpochStats> log;
  double best_dev = -1.0;
  int64_t best_epoch = -1;
  std::string best_checkpoint;  // path
  std::string last_checkpoint;
};

using LogFn = std::function<void(const std::string&)>;

// Full training run: vocabulary build, init (or resume), per-epoch shuffle
// into batches, summed batch loss with per-example skip, global-norm clip,
// Adam update, per-epoch dev evaluation with early stopping, metrics log
// and best/last checkpoints on disk. Deterministic for a fixed
// (config, seed, dataset). Aborts with a diagnostic on divergence.
TrainResult train_loop(const RunConfig& cfg, const tbl::Dataset& ds,
                       const LogFn& log = nullptr);

struct EvalRecord {
  std::string id;
  std::string question;
  std::string program;  // textual program
  tbl::Answer prediction;
  tbl::Answer truth;
  bool correct = false;
};

struct EvalResult {
  int64_t total = 0;
  int64_t correct = 0;
  double accuracy = 0.0;
  double oracle_accuracy = -1.0;  // set when oracle requested
  std::vector<EvalRecord> records;
};

// number answers match within 1e-6 relative error; entries answers match
// as multisets of normalized strings
bool answers_match(const tbl::Answer& prediction, const tbl::Answer& truth);

// Hard evaluation of one or more models. Distributions are averaged across
// models at every timestep before the argmax. With oracle=true also reports
// the fraction of examples some individual model answers correctly.
EvalResult evaluate(const std::vector<const Checkpoint*>& models,
                    const tbl::Dataset& ds, const std::string& split,
                    bool oracle = false);

void save_eval_records(const EvalResult& r, const std::string& path);

// Operation-sequence statistics over the correct examples, grouped into the
// usual taxonomy (reset steps are ignored when classifying).
struct OpStats {
  struct Row {
    std::string label;
    int64_t count = 0;
    double pct = 0.0;  // of correct examples
  };
  int64_t total_correct = 0;
  std::vector<Row> scalar_rows, lookup_rows;
  double scalar_pct = 0.0, lookup_pct = 0.0;

  std::string to_text() const;
};

std::string classify_program(const exec::Program& p);
OpStats op_stats(const std::vector<EvalRecord>& records);
OpStats op_stats_from_file(const std::string& records_path);

}  // namespace tqp::train
