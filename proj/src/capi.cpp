// SPDX-License-Identifier: Apache-2.0
#include "tableprog.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "tableprog/checkpoint.hpp"
#include "tableprog/config.hpp"
#include "tableprog/dataset.hpp"
#include "tableprog/interpreter.hpp"
#include "tableprog/synthetic.hpp"
#include "tableprog/trainer.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_out(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return TQP_OK;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return TQP_EINVAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return TQP_ERUNTIME;
  }
}

template <typename T, typename Fn>
T* guarded_new(Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return nullptr;
  }
}

}  // namespace

struct tqp_config {
  tqp::RunConfig cfg;
};

struct tqp_model {
  tqp::Checkpoint ckpt;
};

struct tqp_dataset {
  tqp::tbl::Dataset ds;
};

extern "C" {

const char* tqp_version(void) { return "1.0.0"; }

const char* tqp_last_error(void) { return g_last_error.c_str(); }

void tqp_string_free(char* s) { std::free(s); }

tqp_config* tqp_config_new(void) {
  return guarded_new<tqp_config>([] { return new tqp_config(); });
}

tqp_config* tqp_config_load(const char* path) {
  return guarded_new<tqp_config>([&] {
    if (!path) throw std::invalid_argument("null config path");
    auto* c = new tqp_config();
    try {
      c->cfg = tqp::RunConfig::load(path);
    } catch (...) {
      delete c;
      throw;
    }
    return c;
  });
}

int tqp_config_set(tqp_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    if (!cfg || !key || !value) throw std::invalid_argument("null argument");
    cfg->cfg.set(key, value);
  });
}

int tqp_config_get(const tqp_config* cfg, const char* key, char** value_out) {
  return guarded([&] {
    if (!cfg || !key || !value_out) throw std::invalid_argument("null argument");
    *value_out = dup_string(cfg->cfg.get(key));
  });
}

int tqp_config_save(const tqp_config* cfg, const char* path) {
  return guarded([&] {
    if (!cfg || !path) throw std::invalid_argument("null argument");
    cfg->cfg.save(path);
  });
}

void tqp_config_free(tqp_config* cfg) { delete cfg; }

int tqp_gen_dataset(uint64_t seed, int64_t n_examples, const char* out_dir,
                    char** report_out) {
  return guarded([&] {
    if (!out_dir) throw std::invalid_argument("null output directory");
    set_out(report_out,
            tqp::tbl::write_synthetic_dataset(seed, n_examples, out_dir));
  });
}

int tqp_train(const tqp_config* cfg, tqp_log_fn log, void* user,
              char** report_out) {
  return guarded([&] {
    if (!cfg) throw std::invalid_argument("null config");
    const std::vector<std::string> errs = cfg->cfg.validate();
    if (!errs.empty()) {
      std::string msg = "invalid config:";
      for (const std::string& e : errs) msg += "\n  " + e;
      throw std::invalid_argument(msg);
    }
    tqp::tbl::Dataset ds = tqp::tbl::load_dataset(cfg->cfg.dataset);
    tqp::train::LogFn logfn;
    if (log)
      logfn = [log, user](const std::string& line) { log(line.c_str(), user); };
    tqp::train::TrainResult r = tqp::train::train_loop(cfg->cfg, ds, logfn);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "trained %zu epochs; best dev accuracy %.4f at epoch %lld\n"
                  "best checkpoint: %s\nlast checkpoint: %s",
                  r.log.size(), r.best_dev,
                  static_cast<long long>(r.best_epoch),
                  r.best_checkpoint.c_str(), r.last_checkpoint.c_str());
    set_out(report_out, buf);
  });
}

tqp_model* tqp_model_load(const char* checkpoint_path) {
  return guarded_new<tqp_model>([&] {
    if (!checkpoint_path) throw std::invalid_argument("null checkpoint path");
    auto* m = new tqp_model();
    try {
      m->ckpt = tqp::Checkpoint::load(checkpoint_path);
    } catch (...) {
      delete m;
      throw;
    }
    return m;
  });
}

void tqp_model_free(tqp_model* m) { delete m; }

tqp_dataset* tqp_dataset_load(const char* manifest_path) {
  return guarded_new<tqp_dataset>([&] {
    if (!manifest_path) throw std::invalid_argument("null manifest path");
    auto* d = new tqp_dataset();
    try {
      d->ds = tqp::tbl::load_dataset(manifest_path);
    } catch (...) {
      delete d;
      throw;
    }
    return d;
  });
}

void tqp_dataset_free(tqp_dataset* d) { delete d; }

int tqp_evaluate(tqp_model* const* models, size_t n_models,
                 const tqp_dataset* data, const char* split, int flags,
                 const char* records_path, double* accuracy_out,
                 double* oracle_out, char** report_out) {
  return guarded([&] {
    if (!models || n_models == 0)
      throw std::invalid_argument("no models given");
    if (!data || !split) throw std::invalid_argument("null dataset or split");
    std::vector<const tqp::Checkpoint*> cks;
    for (size_t i = 0; i < n_models; ++i) {
      if (!models[i]) throw std::invalid_argument("null model handle");
      cks.push_back(&models[i]->ckpt);
    }
    const bool oracle = (flags & TQP_EVAL_ORACLE) != 0;
    tqp::train::EvalResult r =
        tqp::train::evaluate(cks, data->ds, split, oracle);
    if (records_path) tqp::train::save_eval_records(r, records_path);
    if (accuracy_out) *accuracy_out = r.accuracy;
    if (oracle_out) *oracle_out = r.oracle_accuracy;
    char buf[256];
    if (oracle)
      std::snprintf(buf, sizeof(buf),
                    "split %s: accuracy %.4f (%lld/%lld), oracle %.4f, "
                    "models %zu",
                    split, r.accuracy, static_cast<long long>(r.correct),
                    static_cast<long long>(r.total), r.oracle_accuracy,
                    n_models);
    else
      std::snprintf(buf, sizeof(buf),
                    "split %s: accuracy %.4f (%lld/%lld), models %zu", split,
                    r.accuracy, static_cast<long long>(r.correct),
                    static_cast<long long>(r.total), n_models);
    set_out(report_out, buf);
  });
}

int tqp_run_program(const char* table_path, const char* program_text,
                    const char* question, const double* pivot,
                    int64_t timesteps, char** output_out) {
  return guarded([&] {
    if (!table_path || !program_text)
      throw std::invalid_argument("null table path or program");
    const tqp::tbl::Table table = tqp::tbl::load_table(table_path);
    std::vector<std::string> col_names;
    for (const auto& c : table.cols) col_names.push_back(c.name);
    const tqp::exec::Program prog =
        tqp::exec::parse_program(program_text, col_names);
    if (timesteps > 0 &&
        static_cast<int64_t>(prog.steps.size()) != timesteps)
      throw std::invalid_argument(
          "program has " + std::to_string(prog.steps.size()) +
          " steps, expected " + std::to_string(timesteps));

    std::vector<tqp::tbl::Token> qtoks;
    if (question && question[0] != '\0') qtoks = tqp::tbl::tokenize(question);
    tqp::tbl::MatchResult match;
    if (!qtoks.empty()) {
      match = tqp::tbl::match_and_anonymize(qtoks, table);
    } else {
      match.rows = table.rows;
      match.cols = table.num_cols();
      match.select.assign(static_cast<size_t>(table.rows * table.num_cols()), 0);
      match.col_match.assign(static_cast<size_t>(table.num_cols()), 0);
    }

    tqp::exec::PivotSet pivots;
    if (pivot) {
      pivots = tqp::exec::PivotSet::uniform(*pivot);
    } else {
      for (const tqp::tbl::Token& t : qtoks)
        if (t.is_number) {
          pivots = tqp::exec::PivotSet::uniform(t.value);
          break;  // first number token wins
        }
    }

    const tqp::exec::HardTrace tr =
        tqp::exec::run_program_hard(prog, table, match, pivots);

    std::string out;
    for (size_t t = 1; t < tr.row_selectors.size(); ++t) {
      out += "step " + std::to_string(t) + " " +
             tqp::exec::op_name(prog.steps[t - 1].op) + ": selector [";
      for (size_t i = 0; i < tr.row_selectors[t].size(); ++i) {
        if (i) out += " ";
        out += tqp::tbl::number_to_string(tr.row_selectors[t][i]);
      }
      out += "]\n";
    }
    switch (tr.answer.kind) {
      case tqp::tbl::Answer::Kind::Number:
        out += "answer: " + tqp::tbl::number_to_string(tr.answer.number) + "\n";
        break;
      case tqp::tbl::Answer::Kind::Entries: {
        out += "answer:";
        for (const std::string& e : tr.answer.entries) out += " " + e;
        out += "\n";
        break;
      }
      default:
        out += "answer: none\n";
    }
    set_out(output_out, out);
  });
}

int tqp_stats(const char* records_path, char** report_out) {
  return guarded([&] {
    if (!records_path) throw std::invalid_argument("null records path");
    set_out(report_out,
            tqp::train::op_stats_from_file(records_path).to_text());
  });
}

}  // extern "C"
