// SPDX-License-Identifier: Apache-2.0
#include "tableprog/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace tqp::train {

namespace {

constexpr uint64_t kInitStream = 0x696e6974;     // parameter init
constexpr uint64_t kShuffleStream = 0x73687566;  // per-epoch shuffle
constexpr uint64_t kDropStream = 0x64726f70;     // per-example dropout

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json answer_to_json(const tbl::Answer& a) {
  switch (a.kind) {
    case tbl::Answer::Kind::Number:
      return {{"kind", "number"}, {"value", a.number}};
    case tbl::Answer::Kind::Entries:
      return {{"kind", "entries"}, {"value", a.entries}};
    default:
      return {{"kind", "none"}};
  }
}

tbl::Answer answer_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "number")
    return tbl::Answer::make_number(j.at("value").get<double>());
  if (kind == "entries")
    return tbl::Answer::make_entries(
        j.at("value").get<std::vector<std::string>>());
  return tbl::Answer::none();
}

struct PreparedExample {
  const tbl::Example* example = nullptr;
  const tbl::Table* table = nullptr;
  model::QuestionContext ctx;
  AnswerTarget target;
  int64_t dataset_index = 0;
};

}  // namespace

bool answers_match(const tbl::Answer& prediction, const tbl::Answer& truth) {
  if (truth.kind == tbl::Answer::Kind::Number) {
    double pred = 0.0;
    if (prediction.kind == tbl::Answer::Kind::Number) {
      pred = prediction.number;
    } else if (prediction.kind == tbl::Answer::Kind::Entries &&
               prediction.entries.size() == 1) {
      // a single looked-up numeric cell counts as a number answer
      auto v = tbl::parse_number(prediction.entries[0]);
      if (!v) return false;
      pred = *v;
    } else {
      return false;
    }
    const double tol = 1e-6 * std::max(1.0, std::fabs(truth.number));
    return std::fabs(pred - truth.number) <= tol;
  }
  if (truth.kind == tbl::Answer::Kind::Entries) {
    if (prediction.kind != tbl::Answer::Kind::Entries) return false;
    std::vector<std::string> a = prediction.entries, b = truth.entries;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
  }
  return false;
}

EvalResult evaluate(const std::vector<const Checkpoint*>& models,
                    const tbl::Dataset& ds, const std::string& split,
                    bool oracle) {
  if (models.empty()) throw std::invalid_argument("evaluate: no models");
  auto it = ds.splits.find(split);
  if (it == ds.splits.end())
    throw std::invalid_argument("evaluate: unknown split '" + split + "'");

  EvalResult res;
  int64_t oracle_correct = 0;
  for (const tbl::Example& ex : it->second) {
    const tbl::Table& table = ds.table_for(ex);

    // per-model contexts (vocabularies may differ across members)
    std::vector<model::QuestionContext> ctxs;
    ctxs.reserve(models.size());
    for (const Checkpoint* m : models)
      ctxs.push_back(model::prepare_context(ex, table, m->vocab, m->model_cfg));

    tbl::Answer prediction;
    exec::Program program;
    if (models.size() == 1) {
      ad::Graph g;
      model::ForwardOutcome out =
          model::forward(g, models[0]->params, models[0]->model_cfg, ctxs[0],
                         model::Mode::EvalHard, 0);
      prediction = out.answer;
      program = out.program;
    } else {
      std::vector<model::EnsembleMember> members;
      for (size_t k = 0; k < models.size(); ++k)
        members.push_back({&models[k]->params, models[k]->model_cfg, &ctxs[k]});
      model::ForwardOutcome out = model::forward_ensemble_hard(members);
      prediction = out.answer;
      program = out.program;
    }

    EvalRecord rec;
    rec.id = ex.id;
    rec.question = ex.raw_question;
    std::vector<std::string> col_names;
    for (const tbl::Column& c : table.cols) col_names.push_back(c.name);
    rec.program = program.to_text(col_names);
    rec.prediction = prediction;
    rec.truth = ex.answer;
    rec.correct = !ex.unanswerable && answers_match(prediction, ex.answer);
    res.records.push_back(std::move(rec));
    res.total += 1;
    if (res.records.back().correct) res.correct += 1;

    if (oracle) {
      bool any = false;
      for (size_t k = 0; k < models.size() && !any; ++k) {
        ad::Graph g;
        model::ForwardOutcome out =
            model::forward(g, models[k]->params, models[k]->model_cfg, ctxs[k],
                           model::Mode::EvalHard, 0);
        any = !ex.unanswerable && answers_match(out.answer, ex.answer);
      }
      if (any) ++oracle_correct;
    }
  }
  res.accuracy =
      res.total > 0 ? static_cast<double>(res.correct) / res.total : 0.0;
  if (oracle)
    res.oracle_accuracy =
        res.total > 0 ? static_cast<double>(oracle_correct) / res.total : 0.0;
  return res;
}

void save_eval_records(const EvalResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write eval records: " + path);
  for (const EvalRecord& rec : r.records) {
    json j = {{"id", rec.id},
              {"question", rec.question},
              {"program", rec.program},
              {"prediction", answer_to_json(rec.prediction)},
              {"truth", answer_to_json(rec.truth)},
              {"correct", rec.correct}};
    out << j.dump() << '\n';
  }
}

std::string classify_program(const exec::Program& p) {
  using exec::OpId;
  if (p.steps.empty()) return "No Answer";
  const OpId last = p.steps.back().op;
  std::vector<OpId> mid;
  for (size_t i = 0; i + 1 < p.steps.size(); ++i)
    if (p.steps[i].op != OpId::Reset) mid.push_back(p.steps[i].op);

  auto all = [&](auto pred) {
    return std::all_of(mid.begin(), mid.end(), pred);
  };
  auto any = [&](auto pred) {
    return std::any_of(mid.begin(), mid.end(), pred);
  };

  if (last == OpId::Count) {
    if (mid.empty()) return "Only Count";
    if (all([](OpId o) { return exec::op_is_comparison(o); }))
      return "Comparison + Count";
    if (all([](OpId o) { return o == OpId::Select; })) return "Select + Count";
    return "Other + Count";
  }
  if (last == OpId::Print) {
    if (!mid.empty() && all([](OpId o) { return o == OpId::Mfe; }))
      return "Most Frequent Entry + Print";
    if (!mid.empty() &&
        all([](OpId o) { return o == OpId::First || o == OpId::Last; }))
      return "First/Last + Print";
    if (!mid.empty() && all([](OpId o) { return exec::op_is_superlative(o); }))
      return "Superlative + Print";
    if (!mid.empty() && all([](OpId o) { return o == OpId::Select; }))
      return "Select + Print";
    if (any([](OpId o) { return o == OpId::Select; }) &&
        any([](OpId o) {
          return o == OpId::First || o == OpId::Last || o == OpId::Previous ||
                 o == OpId::Next || exec::op_is_superlative(o);
        }))
      return "Select + {first, last, previous, next, superlative} + Print";
    return "Other + Print";
  }
  return "No Answer";
}

OpStats op_stats(const std::vector<EvalRecord>& records) {
  static const std::vector<std::string> scalar_labels = {
      "Only Count", "Comparison + Count", "Select + Count", "Other + Count"};
  static const std::vector<std::string> lookup_labels = {
      "Most Frequent Entry + Print",
      "First/Last + Print",
      "Superlative + Print",
      "Select + Print",
      "Select + {first, last, previous, next, superlative} + Print",
      "Other + Print"};

  OpStats st;
  std::map<std::string, int64_t> counts;
  for (const EvalRecord& rec : records) {
    if (!rec.correct) continue;
    ++st.total_correct;
    ++counts[classify_program(exec::parse_program(rec.program))];
  }
  auto pct = [&](int64_t n) {
    return st.total_correct > 0 ? 100.0 * n / st.total_correct : 0.0;
  };
  int64_t scalar_total = 0, lookup_total = 0;
  for (const std::string& label : scalar_labels) {
    const int64_t n = counts.count(label) ? counts[label] : 0;
    scalar_total += n;
    st.scalar_rows.push_back({label, n, pct(n)});
  }
  for (const std::string& label : lookup_labels) {
    const int64_t n = counts.count(label) ? counts[label] : 0;
    lookup_total += n;
    st.lookup_rows.push_back({label, n, pct(n)});
  }
  st.scalar_pct = pct(scalar_total);
  st.lookup_pct = pct(lookup_total);
  return st;
}

OpStats op_stats_from_file(const std::string& records_path) {
  std::ifstream in(records_path);
  if (!in)
    throw std::runtime_error("cannot open eval records: " + records_path);
  std::vector<EvalRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    EvalRecord rec;
    rec.id = j.at("id").get<std::string>();
    rec.question = j.at("question").get<std::string>();
    rec.program = j.at("program").get<std::string>();
    rec.prediction = answer_from_json(j.at("prediction"));
    rec.truth = answer_from_json(j.at("truth"));
    rec.correct = j.at("correct").get<bool>();
    records.push_back(std::move(rec));
  }
  return op_stats(records);
}

std::string OpStats::to_text() const {
  char buf[160];
  std::string out;
  auto row = [&](const std::string& label, double p) {
    std::snprintf(buf, sizeof(buf), "  %-62s %6.1f%%\n", label.c_str(), p);
    out += buf;
  };
  std::snprintf(buf, sizeof(buf), "operation statistics over %lld correct examples\n",
                static_cast<long long>(total_correct));
  out += buf;
  out += "scalar answer\n";
  for (const Row& r : scalar_rows)
    if (r.count > 0 || r.label.rfind("Other", 0) != 0) row(r.label, r.pct);
  row("Scalar Answer (total)", scalar_pct);
  out += "lookup answer\n";
  for (const Row& r : lookup_rows)
    if (r.count > 0 || r.label.rfind("Other", 0) != 0) row(r.label, r.pct);
  row("Lookup Answer (total)", lookup_pct);
  return out;
}

TrainResult train_loop(const RunConfig& cfg, const tbl::Dataset& ds,
                       const LogFn& log) {
  {
    const std::vector<std::string> errs = cfg.validate();
    if (!errs.empty()) {
      std::string msg = "invalid config:";
      for (const std::string& e : errs) msg += "\n  " + e;
      throw std::invalid_argument(msg);
    }
  }

  auto train_it = ds.splits.find(cfg.train_split);
  if (train_it == ds.splits.end() || train_it->second.empty())
    throw std::invalid_argument("training split '" + cfg.train_split +
                                "' is missing or empty");
  const bool have_dev = ds.splits.count(cfg.dev_split) != 0;

  const model::ModelConfig mcfg = cfg.model_config();
  // the decay penalty is applied once per update, below, not per example
  LossConfig lcfg = cfg.loss_config();
  lcfg.weight_decay = 0.0;

  Checkpoint state;
  state.model_cfg = mcfg;
  int64_t start_epoch = 0;
  if (!cfg.resume_from.empty()) {
    state = Checkpoint::load(cfg.resume_from);
    if (!state.has_trainer_state)
      throw std::invalid_argument("checkpoint has no trainer state to resume: " +
                                  cfg.resume_from);
    if (state.model_cfg.d != mcfg.d || state.model_cfg.T != mcfg.T)
      throw std::invalid_argument("checkpoint shape does not match config");
    state.model_cfg = mcfg;
    state.adam.cfg = cfg.adam_config();
    start_epoch = state.next_epoch;
  } else {
    state.vocab = tbl::Vocabulary::build(train_it->second, cfg.min_count);
    Rng init_rng(mix64(cfg.seed, kInitStream));
    state.params = model::ModelParams::init(state.vocab.size(), cfg.d, init_rng);
    std::vector<ad::Tensor*> ptensors;
    for (auto& [name, t] : state.params.entries()) ptensors.push_back(t);
    state.adam = Adam(cfg.adam_config(), ptensors);
    state.has_trainer_state = true;
    state.best_dev = -1.0;
    state.best_epoch = -1;
    state.evals_since_improvement = 0;
  }

  // trainable examples: answerable, within the row cap, with usable targets
  std::vector<PreparedExample> prepared;
  int64_t ds_index = 0;
  for (const tbl::Example& ex : train_it->second) {
    const int64_t my_index = ds_index++;
    if (ex.unanswerable) continue;
    const tbl::Table& table = ds.table_for(ex);
    if (table.rows > cfg.max_rows) continue;
    PreparedExample pe;
    pe.example = &ex;
    pe.table = &table;
    pe.ctx = model::prepare_context(ex, table, state.vocab, mcfg);
    pe.target = prepare_target(ex.answer, table);
    pe.dataset_index = my_index;
    if (!pe.target.trainable) continue;
    prepared.push_back(std::move(pe));
  }
  if (prepared.empty())
    throw std::invalid_argument("no trainable examples in split '" +
                                cfg.train_split + "'");

  std::vector<ad::Tensor*> ptensors;
  for (auto& [name, t] : state.params.entries()) ptensors.push_back(t);
  const size_t n_params = ptensors.size();

  fs::create_directories(cfg.checkpoint_dir);
  const std::string best_path =
      (fs::path(cfg.checkpoint_dir) / "best.ckpt").string();
  const std::string last_path =
      (fs::path(cfg.checkpoint_dir) / "last.ckpt").string();
  std::ofstream metrics(cfg.log_path,
                        start_epoch > 0 ? std::ios::app : std::ios::trunc);
  if (!metrics)
    throw std::runtime_error("cannot write metrics log: " + cfg.log_path);

  TrainResult result;
  result.best_dev = state.best_dev;
  result.best_epoch = state.best_epoch;

  for (int64_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    std::vector<size_t> order(prepared.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(mix64(cfg.seed, kShuffleStream, static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    int64_t contributed = 0, skipped = 0;

    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));

      std::vector<ad::Tensor> batch_grads;
      for (ad::Tensor* p : ptensors)
        batch_grads.push_back(ad::Tensor::zeros(p->shape));
      double batch_loss = 0.0;
      bool batch_has_grad = false;

      for (size_t bi = start; bi < end; ++bi) {
        const PreparedExample& pe = prepared[order[bi]];
        const uint64_t drop_seed =
            mix64(cfg.seed, mix64(kDropStream, static_cast<uint64_t>(epoch)),
                  static_cast<uint64_t>(pe.dataset_index));
        ad::Graph g;
        std::unique_ptr<model::ForwardPass> pass;
        model::forward(g, state.params, mcfg, pe.ctx, model::Mode::Train,
                       drop_seed, &pass);
        TotalLoss tl =
            total_loss(g, pass->scalar_answer(), pass->lookup_answer(),
                       pe.target, lcfg, pass->param_nodes());
        if (tl.skipped) {
          ++skipped;
          continue;
        }
        const double lv = tl.loss->value[0];
        if (!std::isfinite(lv))
          throw std::runtime_error(
              "training diverged: non-finite loss at epoch " +
              std::to_string(epoch) + ", example " + pe.example->id);
        batch_loss += lv;
        g.backward(tl.loss);
        const auto& pnodes = pass->param_nodes();
        for (size_t k = 0; k < n_params; ++k) {
          const ad::Tensor& grad = pnodes[k]->grad;
          for (int64_t i = 0; i < grad.numel(); ++i)
            batch_grads[k][i] += grad[i];
        }
        batch_has_grad = true;
        epoch_loss += lv;
        ++contributed;
      }

      if (!batch_has_grad) continue;
      if (cfg.weight_decay > 0.0)
        for (size_t k = 0; k < n_params; ++k)
          for (int64_t i = 0; i < batch_grads[k].numel(); ++i)
            batch_grads[k][i] += cfg.weight_decay * (*ptensors[k])[i];
      clip_global_norm(batch_grads, cfg.clip_norm);
      state.adam.step(ptensors, batch_grads);
      (void)batch_loss;
    }

    EpochStats es;
    es.epoch = epoch;
    es.train_loss = contributed > 0 ? epoch_loss / contributed : 0.0;
    es.lr = cfg.adam_lr;
    es.skipped_examples = skipped;

    if (have_dev) {
      EvalResult dev = evaluate({&state}, ds, cfg.dev_split, false);
      es.dev_accuracy = dev.accuracy;
    }

    metrics << "{\"epoch\": " << es.epoch
            << ", \"train_loss\": " << fmt_double(es.train_loss)
            << ", \"dev_accuracy\": " << fmt_double(es.dev_accuracy)
            << ", \"lr\": " << fmt_double(es.lr)
            << ", \"skipped_examples\": " << es.skipped_examples << "}\n";
    metrics.flush();
    if (log) {
      char line[200];
      std::snprintf(line, sizeof(line),
                    "epoch %lld  train_loss %.6f  dev_accuracy %.4f  skipped %lld",
                    static_cast<long long>(es.epoch), es.train_loss,
                    es.dev_accuracy, static_cast<long long>(es.skipped_examples));
      log(line);
    }
    result.log.push_back(es);

    const bool improved = es.dev_accuracy > state.best_dev;
    if (improved) {
      state.best_dev = es.dev_accuracy;
      state.best_epoch = epoch;
      state.evals_since_improvement = 0;
    } else {
      state.evals_since_improvement += 1;
    }
    state.next_epoch = epoch + 1;
    state.save(last_path);
    if (improved) {
      Checkpoint best;
      best.model_cfg = state.model_cfg;
      best.vocab = state.vocab;
      best.params = state.params;
      best.save(best_path);
      result.best_checkpoint = best_path;
    }
    result.best_dev = state.best_dev;
    result.best_epoch = state.best_epoch;
    result.last_checkpoint = last_path;

    if (have_dev && es.dev_accuracy >= cfg.stop_at_dev_accuracy) break;
    if (have_dev && state.evals_since_improvement >= cfg.patience) break;
  }
  return result;
}

}  // namespace tqp::train
