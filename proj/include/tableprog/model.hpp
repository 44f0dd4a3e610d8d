// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tableprog/graph.hpp"
#include "tableprog/interpreter.hpp"
#include "tableprog/masks.hpp"
#include "tableprog/rng.hpp"
#include "tableprog/softops.hpp"
#include "tableprog/table.hpp"
#include "tableprog/text.hpp"

namespace tqp::model {

struct ModelConfig {
  int64_t d = 256;  // embedding/hidden size
  int64_t T = 4;    // timesteps
  double keep_input = 0.8;      // input/output vectors, selector, op/col reps
  double keep_recurrent = 0.9;  // recurrent connections, same mask all steps
  double keep_word = 0.9;       // whole-token replacement with <unk>
  bool match_feature = true;    // additive column-logit bias on matches
  bool anonymize = true;        // replace matched phrases with <match>
};

// All learned tensors. Initialized uniformly in [-0.1, 0.1].
struct ModelParams {
  int64_t vocab_size = 0, d = 0;
  ad::Tensor embed;        // V x d
  ad::Tensor lstm_wx;      // d x 4d, gate order (i, f, o, g)
  ad::Tensor lstm_wh;      // d x 4d
  ad::Tensor lstm_b;       // 4d
  ad::Tensor hist_wx;      // 2d x d
  ad::Tensor hist_wh;      // d x d
  ad::Tensor hist_b;       // d
  ad::Tensor attn_w;       // d x d bilinear attention score
  ad::Tensor op_proj;      // 3d x d
  ad::Tensor col_proj;     // 3d x d
  ad::Tensor op_vec;       // 15 x d
  ad::Tensor pivot_query;  // 4 x d, rows ordered (>, <, >=, <=)
  ad::Tensor match_w;      // {1}

  static ModelParams init(int64_t vocab_size, int64_t d, Rng& rng);

  // canonical (name, tensor) order used for init, checkpoints and the
  // optimizer state
  std::vector<std::pair<std::string, ad::Tensor*>> entries();
  std::vector<std::pair<std::string, const ad::Tensor*>> entries() const;
};

// Fixed per (example, table) input to a forward pass.
struct QuestionContext {
  const tbl::Table* table = nullptr;
  tbl::MatchResult match;
  std::vector<tbl::Token> tokens;        // what the model reads
  std::vector<int64_t> token_ids;
  std::vector<int64_t> number_positions; // indices into tokens
  std::vector<double> number_values;
  std::vector<std::vector<int64_t>> column_name_ids;  // per column
};

QuestionContext prepare_context(const tbl::Example& ex, const tbl::Table& table,
                                const tbl::Vocabulary& vocab,
                                const ModelConfig& cfg);

// One forward pass, stepped one timestep at a time so ensembles can
// synchronize their choices. Usage:
//   ForwardPass fp(...);
//   while (!fp.done()) { auto [op, col] = fp.selector(); fp.push(op, col); }
// Soft execution: push the selector nodes themselves. Hard execution: push
// one-hot constants and read the discrete program afterwards.
class ForwardPass {
 public:
  // with_executor=false skips the soft executor updates (hard eval only
  // needs the selector distributions; answers come from the interpreter)
  ForwardPass(ad::Graph& g, const ModelParams& params, const ModelConfig& cfg,
              const QuestionContext& ctx, bool training, uint64_t dropout_seed,
              bool with_executor = true);

  std::pair<ad::Node*, ad::Node*> selector();
  void push(ad::Node* alpha_op, ad::Node* alpha_col);
  bool done() const { return t_ == cfg_.T; }

  ad::Node* scalar_answer() const;  // timestep-T output variables
  ad::Node* lookup_answer() const;
  const exec::PivotSet& pivots() const { return pivots_; }
  const std::vector<ad::Node*>& row_selectors() const { return row_sel_; }
  const std::vector<ad::Node*>& alpha_op_trace() const { return a_op_; }
  const std::vector<ad::Node*>& alpha_col_trace() const { return a_col_; }
  const std::vector<ad::Node*>& param_nodes() const { return param_nodes_; }
  ad::Node* param_node(const std::string& name) const;

  ad::Graph& graph() { return g_; }
  int64_t num_columns() const { return ctx_.table->num_cols(); }

  // one-hot helpers for hard selection
  ad::Node* one_hot(int64_t size, int64_t index);
  static int64_t argmax(const ad::Tensor& t);

 private:
  void encode();
  ad::Node* dropout(ad::Node* x, double keep);
  ad::Node* embed_token(int64_t id);

  ad::Graph& g_;
  const ModelParams& params_;
  ModelConfig cfg_;
  const QuestionContext& ctx_;
  bool training_;
  bool with_executor_;
  Rng rng_;

  std::vector<ad::Node*> param_nodes_;
  std::vector<std::string> param_names_;
  ad::Node* p_embed_ = nullptr;
  ad::Node* p_lstm_wx_ = nullptr;
  ad::Node* p_lstm_wh_ = nullptr;
  ad::Node* p_lstm_b_ = nullptr;
  ad::Node* p_hist_wx_ = nullptr;
  ad::Node* p_hist_wh_ = nullptr;
  ad::Node* p_hist_b_ = nullptr;
  ad::Node* p_attn_w_ = nullptr;
  ad::Node* p_op_proj_ = nullptr;
  ad::Node* p_col_proj_ = nullptr;
  ad::Node* p_op_vec_ = nullptr;
  ad::Node* p_pivot_query_ = nullptr;
  ad::Node* p_match_w_ = nullptr;

  ad::Node* q_states_ = nullptr;   // N x d
  ad::Node* q_final_ = nullptr;    // d
  ad::Node* col_reps_ = nullptr;   // C x d
  ad::Node* op_reps_ = nullptr;    // 15 x d (post dropout)
  ad::Node* match_bias_ = nullptr; // C or null
  ad::Node* hist_ = nullptr;       // d
  ad::Node* hist_mask_ = nullptr;  // recurrent dropout mask or null

  exec::PivotSet pivots_;
  std::unique_ptr<exec::SoftExecutor> executor_;
  std::vector<ad::Node*> row_sel_;
  std::vector<ad::Node*> a_op_, a_col_;
  ad::Node* scalar_t_ = nullptr;
  ad::Node* lookup_t_ = nullptr;
  int64_t t_ = 0;
};

enum class Mode { Train, EvalSoft, EvalHard };

struct ForwardOutcome {
  exec::Program program;      // EvalHard
  tbl::Answer answer;         // EvalHard
  exec::PivotSet pivots;
  std::vector<ad::Tensor> alpha_op, alpha_col;  // values per timestep
};

// Convenience single-model forward. For Train/EvalSoft the graph holds
// scalar/lookup outputs afterwards; for EvalHard the returned program and
// interpreter answer are authoritative.
ForwardOutcome forward(ad::Graph& g, const ModelParams& params,
                       const ModelConfig& cfg, const QuestionContext& ctx,
                       Mode mode, uint64_t dropout_seed,
                       std::unique_ptr<ForwardPass>* pass_out = nullptr);

struct EnsembleMember {
  const ModelParams* params = nullptr;
  ModelConfig cfg;
  const QuestionContext* ctx = nullptr;  // built with the member's vocabulary
};

// Ensemble hard evaluation: distributions are averaged across models at
// every timestep before the argmax; every member's history sees the shared
// one-hot choice; pivots are averaged for the interpreter run. Members must
// agree on T and reference the same table.
ForwardOutcome forward_ensemble_hard(const std::vector<EnsembleMember>& members);

}  // namespace tqp::model
