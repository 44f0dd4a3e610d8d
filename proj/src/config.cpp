// SPDX-License-Identifier: Apache-2.0
#include "tableprog/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tqp {

namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected boolean, got '" + v + "'");
}

const std::vector<std::pair<std::string, Field>>& fields() {
  auto dbl = [](double RunConfig::*p) {
    return Field{
        [p](const RunConfig& c) { return fmt_double(c.*p); },
        [p](RunConfig& c, const std::string& v) {
          size_t used = 0;
          c.*p = std::stod(v, &used);
          if (used != v.size()) throw std::invalid_argument("bad number");
        }};
  };
  auto i64 = [](int64_t RunConfig::*p) {
    return Field{
        [p](const RunConfig& c) { return std::to_string(c.*p); },
        [p](RunConfig& c, const std::string& v) {
          size_t used = 0;
          c.*p = std::stoll(v, &used);
          if (used != v.size()) throw std::invalid_argument("bad integer");
        }};
  };
  auto bl = [](bool RunConfig::*p) {
    return Field{
        [p](const RunConfig& c) { return (c.*p) ? "true" : "false"; },
        [p](RunConfig& c, const std::string& v) { c.*p = parse_bool(v); }};
  };
  auto str = [](std::string RunConfig::*p) {
    return Field{[p](const RunConfig& c) { return c.*p; },
                 [p](RunConfig& c, const std::string& v) { c.*p = v; }};
  };
  static const std::vector<std::pair<std::string, Field>> table = {
      {"d", i64(&RunConfig::d)},
      {"T", i64(&RunConfig::T)},
      {"keep_input", dbl(&RunConfig::keep_input)},
      {"keep_recurrent", dbl(&RunConfig::keep_recurrent)},
      {"keep_word", dbl(&RunConfig::keep_word)},
      {"match_feature", bl(&RunConfig::match_feature)},
      {"anonymize", bl(&RunConfig::anonymize)},
      {"lookup_scale", dbl(&RunConfig::lookup_scale)},
      {"scalar_skip_threshold", dbl(&RunConfig::scalar_skip_threshold)},
      {"softmin_tau", dbl(&RunConfig::softmin_tau)},
      {"weight_decay", dbl(&RunConfig::weight_decay)},
      {"clip_norm", dbl(&RunConfig::clip_norm)},
      {"adam_lr", dbl(&RunConfig::adam_lr)},
      {"adam_beta1", dbl(&RunConfig::adam_beta1)},
      {"adam_beta2", dbl(&RunConfig::adam_beta2)},
      {"adam_eps", dbl(&RunConfig::adam_eps)},
      {"batch_size", i64(&RunConfig::batch_size)},
      {"seed",
       Field{[](const RunConfig& c) { return std::to_string(c.seed); },
             [](RunConfig& c, const std::string& v) {
               size_t used = 0;
               c.seed = std::stoull(v, &used);
               if (used != v.size()) throw std::invalid_argument("bad integer");
             }}},
      {"max_rows", i64(&RunConfig::max_rows)},
      {"min_count", i64(&RunConfig::min_count)},
      {"epochs", i64(&RunConfig::epochs)},
      {"patience", i64(&RunConfig::patience)},
      {"stop_at_dev_accuracy", dbl(&RunConfig::stop_at_dev_accuracy)},
      {"dataset", str(&RunConfig::dataset)},
      {"train_split", str(&RunConfig::train_split)},
      {"dev_split", str(&RunConfig::dev_split)},
      {"checkpoint_dir", str(&RunConfig::checkpoint_dir)},
      {"log_path", str(&RunConfig::log_path)},
      {"resume_from", str(&RunConfig::resume_from)},
  };
  return table;
}

}  // namespace

model::ModelConfig RunConfig::model_config() const {
  model::ModelConfig m;
  m.d = d;
  m.T = T;
  m.keep_input = keep_input;
  m.keep_recurrent = keep_recurrent;
  m.keep_word = keep_word;
  m.match_feature = match_feature;
  m.anonymize = anonymize;
  return m;
}

train::LossConfig RunConfig::loss_config() const {
  train::LossConfig l;
  l.lookup_scale = lookup_scale;
  l.scalar_skip_threshold = scalar_skip_threshold;
  l.softmin_tau = softmin_tau;
  l.weight_decay = weight_decay;
  return l;
}

train::AdamConfig RunConfig::adam_config() const {
  train::AdamConfig a;
  a.lr = adam_lr;
  a.beta1 = adam_beta1;
  a.beta2 = adam_beta2;
  a.eps = adam_eps;
  return a;
}

std::vector<std::string> RunConfig::validate() const {
  std::vector<std::string> errs;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0)) errs.push_back(std::string(name) + " must be positive");
  };
  auto keep = [&](double v, const char* name) {
    if (!(v > 0.0 && v <= 1.0))
      errs.push_back(std::string(name) + " must be in (0, 1]");
  };
  if (d < 1) errs.push_back("d must be >= 1");
  if (T < 1) errs.push_back("T must be >= 1");
  keep(keep_input, "keep_input");
  keep(keep_recurrent, "keep_recurrent");
  keep(keep_word, "keep_word");
  positive(lookup_scale, "lookup_scale");
  positive(scalar_skip_threshold, "scalar_skip_threshold");
  positive(softmin_tau, "softmin_tau");
  if (weight_decay < 0.0) errs.push_back("weight_decay must be >= 0");
  positive(clip_norm, "clip_norm");
  positive(adam_lr, "adam_lr");
  positive(adam_eps, "adam_eps");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0))
    errs.push_back("adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    errs.push_back("adam_beta2 must be in [0, 1)");
  if (batch_size < 1) errs.push_back("batch_size must be >= 1");
  if (max_rows < 1) errs.push_back("max_rows must be >= 1");
  if (min_count < 1) errs.push_back("min_count must be >= 1");
  if (epochs < 1) errs.push_back("epochs must be >= 1");
  if (patience < 1) errs.push_back("patience must be >= 1");
  if (dataset.empty()) errs.push_back("dataset path is required");
  if (checkpoint_dir.empty()) errs.push_back("checkpoint_dir is required");
  if (log_path.empty()) errs.push_back("log_path is required");
  return errs;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& [name, f] : fields())
    if (name == key) {
      try {
        f.set(*this, value);
      } catch (const std::exception& e) {
        throw std::invalid_argument("config key '" + key + "': " + e.what());
      }
      return;
    }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

std::string RunConfig::get(const std::string& key) const {
  for (const auto& [name, f] : fields())
    if (name == key) return f.get(*this);
  throw std::invalid_argument("unknown config key '" + key + "'");
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& [name, f] : fields())
    out += name + " = " + f.get(*this) + "\n";
  return out;
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped;
    for (char c : line) {
      if (c == '#') break;
      stripped += c;
    }
    size_t b = stripped.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    size_t e = stripped.find_last_not_of(" \t");
    stripped = stripped.substr(b, e - b + 1);
    size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    std::string key = stripped.substr(0, eq);
    std::string val = stripped.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t'))
      key.pop_back();
    while (!val.empty() && (val.front() == ' ' || val.front() == '\t'))
      val.erase(val.begin());
    cfg.set(key, val);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << serialize();
}

}  // namespace tqp
