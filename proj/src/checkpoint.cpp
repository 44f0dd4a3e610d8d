// SPDX-License-Identifier: Apache-2.0
#include "tableprog/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
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

struct TensorEntry {
  std::string name;
  std::vector<int64_t> shape;
  int64_t offset = 0;  // in doubles
};

void write_doubles(std::ofstream& out, const ad::Tensor& t) {
  static_assert(sizeof(double) == 8);
  out.write(reinterpret_cast<const char*>(t.v.data()),
            static_cast<std::streamsize>(t.v.size() * sizeof(double)));
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);

  std::vector<std::pair<std::string, const ad::Tensor*>> tensors =
      params.entries();
  if (has_trainer_state) {
    auto names = params.entries();
    for (size_t k = 0; k < names.size(); ++k) {
      tensors.emplace_back("adam.m." + names[k].first, &adam.m[k]);
      tensors.emplace_back("adam.v." + names[k].first, &adam.v[k]);
    }
  }

  out << "tqpckpt " << kVersion << "\n";
  out << "meta vocab_size " << params.vocab_size << "\n";
  out << "meta d " << params.d << "\n";
  out << "meta T " << model_cfg.T << "\n";
  out << "meta keep_input " << fmt_double(model_cfg.keep_input) << "\n";
  out << "meta keep_recurrent " << fmt_double(model_cfg.keep_recurrent) << "\n";
  out << "meta keep_word " << fmt_double(model_cfg.keep_word) << "\n";
  out << "meta match_feature " << (model_cfg.match_feature ? 1 : 0) << "\n";
  out << "meta anonymize " << (model_cfg.anonymize ? 1 : 0) << "\n";
  if (has_trainer_state) {
    out << "meta adam_steps " << adam.steps << "\n";
    out << "meta adam_lr " << fmt_double(adam.cfg.lr) << "\n";
    out << "meta adam_beta1 " << fmt_double(adam.cfg.beta1) << "\n";
    out << "meta adam_beta2 " << fmt_double(adam.cfg.beta2) << "\n";
    out << "meta adam_eps " << fmt_double(adam.cfg.eps) << "\n";
    out << "meta next_epoch " << next_epoch << "\n";
    out << "meta best_dev " << fmt_double(best_dev) << "\n";
    out << "meta best_epoch " << best_epoch << "\n";
    out << "meta evals_since_improvement " << evals_since_improvement << "\n";
  }

  out << "vocab " << vocab.size() << "\n";
  for (const std::string& t : vocab.tokens()) out << t << "\n";

  int64_t offset = 0;
  for (const auto& [name, tensor] : tensors) {
    out << "tensor " << name << " " << tensor->rank();
    for (int64_t dim : tensor->shape) out << " " << dim;
    out << " " << offset << "\n";
    offset += tensor->numel();
  }
  out << "payload " << offset << "\n";
  for (const auto& [name, tensor] : tensors) write_doubles(out, *tensor);
  if (!out) throw std::runtime_error("error writing checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

  auto bad = [&](const std::string& msg) -> std::runtime_error {
    return std::runtime_error("checkpoint " + path + ": " + msg);
  };

  std::string line;
  if (!std::getline(in, line)) throw bad("empty file");
  {
    char tag[16];
    int version = 0;
    if (std::sscanf(line.c_str(), "%15s %d", tag, &version) != 2 ||
        std::string(tag) != "tqpckpt")
      throw bad("not a checkpoint file");
    if (version != kVersion)
      throw bad("unsupported version " + std::to_string(version));
  }

  Checkpoint ck;
  std::map<std::string, std::string> meta;
  std::vector<TensorEntry> tensors;
  std::vector<std::string> vocab_tokens;
  int64_t payload = -1;

  while (std::getline(in, line)) {
    if (line.rfind("meta ", 0) == 0) {
      const size_t sp = line.find(' ', 5);
      if (sp == std::string::npos) throw bad("malformed meta line");
      meta[line.substr(5, sp - 5)] = line.substr(sp + 1);
    } else if (line.rfind("vocab ", 0) == 0) {
      const int64_t n = std::stoll(line.substr(6));
      for (int64_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw bad("truncated vocabulary");
        vocab_tokens.push_back(line);
      }
    } else if (line.rfind("tensor ", 0) == 0) {
      std::istringstream ss(line.substr(7));
      TensorEntry e;
      int rank = 0;
      if (!(ss >> e.name >> rank)) throw bad("malformed tensor line");
      for (int r = 0; r < rank; ++r) {
        int64_t dim;
        if (!(ss >> dim)) throw bad("malformed tensor shape");
        e.shape.push_back(dim);
      }
      if (!(ss >> e.offset)) throw bad("malformed tensor offset");
      tensors.push_back(std::move(e));
    } else if (line.rfind("payload ", 0) == 0) {
      payload = std::stoll(line.substr(8));
      break;
    } else {
      throw bad("unexpected manifest line: " + line);
    }
  }
  if (payload < 0) throw bad("missing payload");

  std::vector<double> data(static_cast<size_t>(payload));
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(data.size() * sizeof(double)))
    throw bad("truncated payload");

  auto need_meta = [&](const std::string& key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end()) throw bad("missing meta " + key);
    return it->second;
  };

  const int64_t vocab_size = std::stoll(need_meta("vocab_size"));
  const int64_t d = std::stoll(need_meta("d"));
  ck.model_cfg.d = d;
  ck.model_cfg.T = std::stoll(need_meta("T"));
  ck.model_cfg.keep_input = std::stod(need_meta("keep_input"));
  ck.model_cfg.keep_recurrent = std::stod(need_meta("keep_recurrent"));
  ck.model_cfg.keep_word = std::stod(need_meta("keep_word"));
  ck.model_cfg.match_feature = need_meta("match_feature") == "1";
  ck.model_cfg.anonymize = need_meta("anonymize") == "1";

  if (static_cast<int64_t>(vocab_tokens.size()) != vocab_size)
    throw bad("vocabulary size mismatch");
  ck.vocab = tbl::Vocabulary::from_tokens(std::move(vocab_tokens));

  // allocate expected shapes, then fill from the payload with validation
  Rng dummy(0);
  ck.params = model::ModelParams::init(vocab_size, d, dummy);

  std::map<std::string, TensorEntry*> by_name;
  for (TensorEntry& e : tensors) by_name[e.name] = &e;

  auto fill = [&](const std::string& name, ad::Tensor& dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw bad("missing tensor " + name);
    const TensorEntry& e = *it->second;
    if (e.shape != dst.shape)
      throw bad("tensor " + name + " has shape mismatch against config");
    if (e.offset < 0 || e.offset + dst.numel() > payload)
      throw bad("tensor " + name + " offset out of range");
    std::memcpy(dst.v.data(), data.data() + e.offset,
                dst.v.size() * sizeof(double));
  };

  for (auto& [name, tensor] : ck.params.entries()) fill(name, *tensor);

  if (meta.count("adam_steps")) {
    ck.has_trainer_state = true;
    ck.adam.cfg.lr = std::stod(need_meta("adam_lr"));
    ck.adam.cfg.beta1 = std::stod(need_meta("adam_beta1"));
    ck.adam.cfg.beta2 = std::stod(need_meta("adam_beta2"));
    ck.adam.cfg.eps = std::stod(need_meta("adam_eps"));
    ck.adam.steps = std::stoll(need_meta("adam_steps"));
    ck.next_epoch = std::stoll(need_meta("next_epoch"));
    ck.best_dev = std::stod(need_meta("best_dev"));
    ck.best_epoch = std::stoll(need_meta("best_epoch"));
    ck.evals_since_improvement =
        std::stoll(need_meta("evals_since_improvement"));
    for (auto& [name, tensor] : ck.params.entries()) {
      ad::Tensor m(tensor->shape), v(tensor->shape);
      fill("adam.m." + name, m);
      fill("adam.v." + name, v);
      ck.adam.m.push_back(std::move(m));
      ck.adam.v.push_back(std::move(v));
    }
  }
  return ck;
}

}  // namespace tqp
