// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Links only the C API.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tableprog.h"

namespace {

void print_log_line(const char* line, void*) { std::printf("%s\n", line); }

int fail(int code) {
  std::fprintf(stderr, "error: %s\n", tqp_last_error());
  return code;
}

void print_and_free(char* s) {
  if (s) {
    std::fputs(s, stdout);
    if (s[0] != '\0' && s[std::string(s).size() - 1] != '\n')
      std::fputc('\n', stdout);
    tqp_string_free(s);
  }
}

struct ConfigGuard {
  tqp_config* cfg = nullptr;
  ~ConfigGuard() { tqp_config_free(cfg); }
};

// --config file plus any --set key=value overrides
int load_config(const std::string& path,
                const std::vector<std::string>& overrides, ConfigGuard& out) {
  out.cfg = path.empty() ? tqp_config_new() : tqp_config_load(path.c_str());
  if (!out.cfg) return TQP_EINVAL;
  for (const std::string& kv : overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n",
                   kv.c_str());
      return TQP_EINVAL;
    }
    if (int rc = tqp_config_set(out.cfg, kv.substr(0, eq).c_str(),
                                kv.substr(eq + 1).c_str()))
      return rc;
  }
  return TQP_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"neural program induction over tables"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  uint64_t gen_seed = 1;
  int64_t gen_n = 1000;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("-n,--examples", gen_n, "number of examples");
  gen->add_option("-o,--out", gen_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "train a model");
  std::string train_config;
  std::vector<std::string> train_sets;
  uint64_t train_seed = 0;
  bool train_seed_given = false;
  train->add_option("--config", train_config, "config file (key = value)");
  train->add_option("--set", train_sets, "config override key=value");
  train->add_option("--seed", train_seed, "override the config seed")
      ->each([&](const std::string&) { train_seed_given = true; });

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate checkpoints");
  std::vector<std::string> eval_ckpts;
  std::string eval_manifest, eval_split = "dev", eval_records;
  bool eval_ensemble = false, eval_oracle = false;
  eval->add_option("--checkpoint", eval_ckpts, "checkpoint file (repeatable)")
      ->required();
  eval->add_option("--dataset", eval_manifest, "dataset manifest")->required();
  eval->add_option("--split", eval_split, "split name (default dev)");
  eval->add_option("--records", eval_records, "write per-example JSONL here");
  eval->add_flag("--ensemble", eval_ensemble,
                 "average distributions over all checkpoints (implied by >1)");
  eval->add_flag("--oracle", eval_oracle,
                 "also report the any-model-correct fraction");

  // run
  auto* run = app.add_subcommand("run", "execute a program on a table");
  std::string run_table, run_program, run_question;
  double run_pivot = 0.0;
  bool run_pivot_given = false;
  int64_t run_T = 4;
  run->add_option("--table", run_table, "table TSV file")->required();
  run->add_option("--program", run_program,
                  "program text, steps 'op[:column]' separated by '/'")
      ->required();
  run->add_option("--question", run_question,
                  "question (drives select matches and pivots)");
  run->add_option("--pivot", run_pivot, "set all comparison pivots")
      ->each([&](const std::string&) { run_pivot_given = true; });
  run->add_option("-T,--timesteps", run_T,
                  "required program length (0 disables the check)");

  // stats
  auto* stats = app.add_subcommand("stats", "operation statistics from eval records");
  std::string stats_records;
  stats->add_option("--records", stats_records, "eval records JSONL")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : TQP_EINVAL;
  }

  if (gen->parsed()) {
    char* report = nullptr;
    if (int rc = tqp_gen_dataset(gen_seed, gen_n, gen_out.c_str(), &report))
      return fail(rc);
    print_and_free(report);
    return TQP_OK;
  }

  if (train->parsed()) {
    ConfigGuard cfg;
    if (int rc = load_config(train_config, train_sets, cfg))
      return cfg.cfg ? fail(rc) : fail(TQP_EINVAL);
    if (train_seed_given &&
        tqp_config_set(cfg.cfg, "seed", std::to_string(train_seed).c_str()))
      return fail(TQP_EINVAL);
    char* report = nullptr;
    if (int rc = tqp_train(cfg.cfg, print_log_line, nullptr, &report))
      return fail(rc);
    print_and_free(report);
    return TQP_OK;
  }

  if (eval->parsed()) {
    (void)eval_ensemble;  // averaging applies whenever >1 checkpoint is given
    std::vector<tqp_model*> models;
    for (const std::string& path : eval_ckpts) {
      tqp_model* m = tqp_model_load(path.c_str());
      if (!m) {
        for (tqp_model* old : models) tqp_model_free(old);
        return fail(TQP_EINVAL);
      }
      models.push_back(m);
    }
    tqp_dataset* ds = tqp_dataset_load(eval_manifest.c_str());
    if (!ds) {
      for (tqp_model* m : models) tqp_model_free(m);
      return fail(TQP_EINVAL);
    }
    char* report = nullptr;
    const int flags = eval_oracle ? TQP_EVAL_ORACLE : 0;
    const int rc = tqp_evaluate(
        models.data(), models.size(), ds, eval_split.c_str(), flags,
        eval_records.empty() ? nullptr : eval_records.c_str(), nullptr,
        nullptr, &report);
    tqp_dataset_free(ds);
    for (tqp_model* m : models) tqp_model_free(m);
    if (rc) return fail(rc);
    print_and_free(report);
    return TQP_OK;
  }

  if (run->parsed()) {
    char* output = nullptr;
    if (int rc = tqp_run_program(
            run_table.c_str(), run_program.c_str(),
            run_question.empty() ? nullptr : run_question.c_str(),
            run_pivot_given ? &run_pivot : nullptr, run_T, &output))
      return fail(rc);
    print_and_free(output);
    return TQP_OK;
  }

  if (stats->parsed()) {
    char* report = nullptr;
    if (int rc = tqp_stats(stats_records.c_str(), &report)) return fail(rc);
    print_and_free(report);
    return TQP_OK;
  }
  return TQP_EINVAL;
}
