// SPDX-License-Identifier: Apache-2.0
#include "tableprog/model.hpp"

#include <stdexcept>

namespace tqp::model {

using ad::Graph;
using ad::Node;
using ad::Tensor;

namespace {

void fill_uniform(Tensor& t, Rng& rng) {
  for (double& v : t.v) v = rng.uniform(-0.1, 0.1);
}

}  // namespace

ModelParams ModelParams::init(int64_t vocab_size, int64_t d, Rng& rng) {
  if (vocab_size < 2 || d < 1)
    throw std::invalid_argument("bad model dimensions");
  ModelParams p;
  p.vocab_size = vocab_size;
  p.d = d;
  p.embed = Tensor({vocab_size, d});
  p.lstm_wx = Tensor({d, 4 * d});
  p.lstm_wh = Tensor({d, 4 * d});
  p.lstm_b = Tensor({4 * d});
  p.hist_wx = Tensor({2 * d, d});
  p.hist_wh = Tensor({d, d});
  p.hist_b = Tensor({d});
  p.attn_w = Tensor({d, d});
  p.op_proj = Tensor({3 * d, d});
  p.col_proj = Tensor({3 * d, d});
  p.op_vec = Tensor({exec::kNumOps, d});
  p.pivot_query = Tensor({4, d});
  p.match_w = Tensor({1});
  for (auto& [name, tensor] : p.entries()) {
    (void)name;
    fill_uniform(*tensor, rng);
  }
  return p;
}

std::vector<std::pair<std::string, ad::Tensor*>> ModelParams::entries() {
  return {
      {"embed", &embed},           {"lstm_wx", &lstm_wx},
      {"lstm_wh", &lstm_wh},       {"lstm_b", &lstm_b},
      {"hist_wx", &hist_wx},       {"hist_wh", &hist_wh},
      {"hist_b", &hist_b},         {"attn_w", &attn_w},
      {"op_proj", &op_proj},       {"col_proj", &col_proj},
      {"op_vec", &op_vec},         {"pivot_query", &pivot_query},
      {"match_w", &match_w},
  };
}

std::vector<std::pair<std::string, const ad::Tensor*>> ModelParams::entries()
    const {
  std::vector<std::pair<std::string, const ad::Tensor*>> out;
  for (auto& [name, tensor] : const_cast<ModelParams*>(this)->entries())
    out.emplace_back(name, tensor);
  return out;
}

QuestionContext prepare_context(const tbl::Example& ex, const tbl::Table& table,
                                const tbl::Vocabulary& vocab,
                                const ModelConfig& cfg) {
  if (ex.question.empty())
    throw std::invalid_argument("example " + ex.id + ": empty question");
  if (table.num_cols() == 0)
    throw std::invalid_argument("table " + table.id + " has no columns");
  QuestionContext ctx;
  ctx.table = &table;
  ctx.match = tbl::match_and_anonymize(ex.question, table);
  ctx.tokens = cfg.anonymize ? ctx.match.anonymized : ex.question;
  for (size_t p = 0; p < ctx.tokens.size(); ++p) {
    const tbl::Token& t = ctx.tokens[p];
    ctx.token_ids.push_back(vocab.id(t));
    if (t.is_number) {
      ctx.number_positions.push_back(static_cast<int64_t>(p));
      ctx.number_values.push_back(t.value);
    }
  }
  for (const tbl::Column& col : table.cols) {
    std::vector<int64_t> ids;
    for (const std::string& tok : col.name_tokens) ids.push_back(vocab.id(tok));
    if (ids.empty()) ids.push_back(tbl::kUnkId);
    ctx.column_name_ids.push_back(std::move(ids));
  }
  return ctx;
}

ForwardPass::ForwardPass(Graph& g, const ModelParams& params,
                         const ModelConfig& cfg, const QuestionContext& ctx,
                         bool training, uint64_t dropout_seed,
                         bool with_executor)
    : g_(g),
      params_(params),
      cfg_(cfg),
      ctx_(ctx),
      training_(training),
      with_executor_(with_executor),
      rng_(dropout_seed) {
  if (ctx.token_ids.empty())
    throw std::invalid_argument("forward: empty token list");
  if (ctx.table->num_cols() == 0)
    throw std::invalid_argument("forward: table has no columns");
  encode();
}

Node* ForwardPass::dropout(Node* x, double keep) {
  if (!training_ || keep >= 1.0) return x;
  Tensor mask(x->value.shape);
  for (double& m : mask.v) m = rng_.bernoulli(keep) ? 1.0 / keep : 0.0;
  return g_.mul(x, g_.constant(std::move(mask)));
}

Node* ForwardPass::embed_token(int64_t id) {
  return g_.reshape(g_.gather_rows(p_embed_, {id}), {params_.d});
}

Node* ForwardPass::param_node(const std::string& name) const {
  for (size_t i = 0; i < param_names_.size(); ++i)
    if (param_names_[i] == name) return param_nodes_[i];
  throw std::invalid_argument("unknown parameter: " + name);
}

void ForwardPass::encode() {
  const int64_t d = params_.d;

  for (auto& [name, tensor] : params_.entries()) {
    param_names_.push_back(name);
    param_nodes_.push_back(g_.leaf(*tensor, /*requires_grad=*/true));
  }
  p_embed_ = param_node("embed");
  p_lstm_wx_ = param_node("lstm_wx");
  p_lstm_wh_ = param_node("lstm_wh");
  p_lstm_b_ = param_node("lstm_b");
  p_hist_wx_ = param_node("hist_wx");
  p_hist_wh_ = param_node("hist_wh");
  p_hist_b_ = param_node("hist_b");
  p_attn_w_ = param_node("attn_w");
  p_op_proj_ = param_node("op_proj");
  p_col_proj_ = param_node("col_proj");
  p_op_vec_ = param_node("op_vec");
  p_pivot_query_ = param_node("pivot_query");
  p_match_w_ = param_node("match_w");

  // word dropout: whole tokens fall back to <unk>
  std::vector<int64_t> ids = ctx_.token_ids;
  if (training_ && cfg_.keep_word < 1.0)
    for (int64_t& id : ids)
      if (!rng_.bernoulli(cfg_.keep_word)) id = tbl::kUnkId;

  // question LSTM
  const int64_t N = static_cast<int64_t>(ids.size());
  Node* rec_mask = nullptr;
  if (training_ && cfg_.keep_recurrent < 1.0) {
    Tensor m({d});
    for (double& v : m.v)
      v = rng_.bernoulli(cfg_.keep_recurrent) ? 1.0 / cfg_.keep_recurrent : 0.0;
    rec_mask = g_.constant(std::move(m));
  }
  Node* h = g_.constant(Tensor::zeros({d}));
  Node* c = g_.constant(Tensor::zeros({d}));
  std::vector<Node*> states;
  states.reserve(static_cast<size_t>(N));
  for (int64_t p = 0; p < N; ++p) {
    Node* x = dropout(embed_token(ids[static_cast<size_t>(p)]), cfg_.keep_input);
    Node* h_rec = rec_mask ? g_.mul(h, rec_mask) : h;
    Node* z = g_.add(g_.add(g_.vecmat(x, p_lstm_wx_), g_.vecmat(h_rec, p_lstm_wh_)),
                     p_lstm_b_);
    Node* gi = g_.sigmoid(g_.slice(z, 0, d));
    Node* gf = g_.sigmoid(g_.slice(z, d, d));
    Node* go = g_.sigmoid(g_.slice(z, 2 * d, d));
    Node* gc = g_.tanh(g_.slice(z, 3 * d, d));
    c = g_.add(g_.mul(gf, c), g_.mul(gi, gc));
    h = g_.mul(go, g_.tanh(c));
    states.push_back(dropout(h, cfg_.keep_input));  // output dropout
  }
  q_final_ = states.back();
  q_states_ = g_.reshape(g_.concat(states), {N, d});

  // pivots from the states at number-token positions (the comparison masks
  // are constants in the graph, so this stays outside it)
  std::vector<const Tensor*> num_states;
  for (int64_t pos : ctx_.number_positions)
    num_states.push_back(&states[static_cast<size_t>(pos)]->value);
  pivots_ = exec::compute_pivots(ctx_.number_values, num_states,
                                 params_.pivot_query);

  // column representations: mean of name-token embeddings
  const int64_t C = ctx_.table->num_cols();
  std::vector<Node*> reps;
  for (int64_t j = 0; j < C; ++j) {
    const auto& name_ids = ctx_.column_name_ids[static_cast<size_t>(j)];
    Node* gathered = g_.gather_rows(p_embed_, name_ids);
    Node* mean = g_.scale(g_.sum_axis(gathered, 0),
                          1.0 / static_cast<double>(name_ids.size()));
    reps.push_back(mean);
  }
  col_reps_ = dropout(g_.reshape(g_.concat(reps), {C, d}), cfg_.keep_input);
  op_reps_ = dropout(p_op_vec_, cfg_.keep_input);

  if (cfg_.match_feature) {
    Tensor flags({C});
    for (int64_t j = 0; j < C; ++j)
      flags[j] = ctx_.match.col_match[static_cast<size_t>(j)] ? 1.0 : 0.0;
    match_bias_ = g_.mul(g_.constant(std::move(flags)), p_match_w_);
  }

  if (with_executor_) {
    const exec::ExecMasks masks =
        exec::ExecMasks::build(*ctx_.table, ctx_.match, pivots_);
    executor_ = std::make_unique<exec::SoftExecutor>(g_, masks);
    row_sel_.push_back(executor_->initial_selector());
  }

  hist_ = g_.constant(Tensor::zeros({d}));
  if (training_ && cfg_.keep_recurrent < 1.0) {
    Tensor m({d});
    for (double& v : m.v)
      v = rng_.bernoulli(cfg_.keep_recurrent) ? 1.0 / cfg_.keep_recurrent : 0.0;
    hist_mask_ = g_.constant(std::move(m));
  }
}

std::pair<Node*, Node*> ForwardPass::selector() {
  // soft attention over the question states, queried by the history state
  Node* u = g_.vecmat(hist_, p_attn_w_);
  Node* scores = g_.matvec(q_states_, u);
  Node* beta = g_.softmax(scores);
  Node* attn = g_.vecmat(beta, q_states_);

  Node* ctx = dropout(g_.concat(std::vector<Node*>{q_final_, hist_, attn}),
                      cfg_.keep_input);
  // bounded projections keep the score softmax from saturating early
  Node* op_logits = g_.matvec(op_reps_, g_.tanh(g_.vecmat(ctx, p_op_proj_)));
  Node* col_logits =
      g_.matvec(col_reps_, g_.tanh(g_.vecmat(ctx, p_col_proj_)));
  if (match_bias_) col_logits = g_.add(col_logits, match_bias_);
  return {g_.softmax(op_logits), g_.softmax(col_logits)};
}

void ForwardPass::push(Node* alpha_op, Node* alpha_col) {
  if (done()) throw std::logic_error("forward pass already finished");
  a_op_.push_back(alpha_op);
  a_col_.push_back(alpha_col);

  if (with_executor_) {
    Node* rs = row_sel_.back();
    scalar_t_ = executor_->scalar_answer(rs, alpha_op);
    lookup_t_ = executor_->lookup_answer(rs, alpha_op, alpha_col);
    row_sel_.push_back(executor_->step_selector(rs, alpha_op, alpha_col));
  }

  // history RNN input: probability-weighted op/column representations
  Node* op_in = g_.vecmat(alpha_op, op_reps_);
  Node* col_in = g_.vecmat(alpha_col, col_reps_);
  Node* x = g_.concat(std::vector<Node*>{op_in, col_in});
  Node* h_rec = hist_mask_ ? g_.mul(hist_, hist_mask_) : hist_;
  hist_ = g_.tanh(g_.add(
      g_.add(g_.vecmat(x, p_hist_wx_), g_.vecmat(h_rec, p_hist_wh_)),
      p_hist_b_));
  ++t_;
}

Node* ForwardPass::scalar_answer() const {
  if (!done() || !scalar_t_) throw std::logic_error("forward pass not finished");
  return scalar_t_;
}

Node* ForwardPass::lookup_answer() const {
  if (!done() || !lookup_t_) throw std::logic_error("forward pass not finished");
  return lookup_t_;
}

Node* ForwardPass::one_hot(int64_t size, int64_t index) {
  Tensor t({size});
  t[index] = 1.0;
  return g_.constant(std::move(t));
}

int64_t ForwardPass::argmax(const Tensor& t) {
  int64_t best = 0;
  for (int64_t i = 1; i < t.numel(); ++i)
    if (t[i] > t[best]) best = i;  // ties: lowest index wins
  return best;
}

ForwardOutcome forward(Graph& g, const ModelParams& params,
                       const ModelConfig& cfg, const QuestionContext& ctx,
                       Mode mode, uint64_t dropout_seed,
                       std::unique_ptr<ForwardPass>* pass_out) {
  const bool hard = mode == Mode::EvalHard;
  auto pass = std::make_unique<ForwardPass>(g, params, cfg, ctx,
                                            mode == Mode::Train, dropout_seed,
                                            /*with_executor=*/!hard);
  ForwardOutcome out;
  while (!pass->done()) {
    auto [a_op, a_col] = pass->selector();
    out.alpha_op.push_back(a_op->value);
    out.alpha_col.push_back(a_col->value);
    if (hard) {
      const int64_t opi = ForwardPass::argmax(a_op->value);
      const int64_t coli = ForwardPass::argmax(a_col->value);
      exec::ProgramStep step;
      step.op = static_cast<exec::OpId>(opi);
      step.column = op_takes_column(step.op) ? coli : -1;
      out.program.steps.push_back(step);
      pass->push(pass->one_hot(exec::kNumOps, opi),
                 pass->one_hot(ctx.table->num_cols(), coli));
    } else {
      pass->push(a_op, a_col);
    }
  }
  out.pivots = pass->pivots();
  if (hard)
    out.answer =
        exec::run_program_hard(out.program, *ctx.table, ctx.match, pass->pivots())
            .answer;
  if (pass_out) *pass_out = std::move(pass);
  return out;
}

ForwardOutcome forward_ensemble_hard(const std::vector<EnsembleMember>& members) {
  if (members.empty()) throw std::invalid_argument("ensemble of zero models");
  const QuestionContext& ctx0 = *members[0].ctx;
  const int64_t T = members[0].cfg.T;
  for (const EnsembleMember& m : members) {
    if (m.cfg.T != T)
      throw std::invalid_argument("ensemble members disagree on T");
    if (m.ctx->table != ctx0.table)
      throw std::invalid_argument("ensemble members reference different tables");
  }

  std::vector<std::unique_ptr<Graph>> graphs;
  std::vector<std::unique_ptr<ForwardPass>> passes;
  for (const EnsembleMember& m : members) {
    graphs.push_back(std::make_unique<Graph>());
    passes.push_back(std::make_unique<ForwardPass>(
        *graphs.back(), *m.params, m.cfg, *m.ctx, /*training=*/false,
        /*dropout_seed=*/0, /*with_executor=*/false));
  }

  ForwardOutcome out;
  const int64_t C = ctx0.table->num_cols();
  const double k = static_cast<double>(members.size());
  while (!passes[0]->done()) {
    Tensor avg_op({exec::kNumOps}), avg_col({C});
    for (auto& p : passes) {
      auto [a_op, a_col] = p->selector();
      for (int64_t i = 0; i < exec::kNumOps; ++i) avg_op[i] += a_op->value[i] / k;
      for (int64_t j = 0; j < C; ++j) avg_col[j] += a_col->value[j] / k;
    }
    out.alpha_op.push_back(avg_op);
    out.alpha_col.push_back(avg_col);
    const int64_t opi = ForwardPass::argmax(avg_op);
    const int64_t coli = ForwardPass::argmax(avg_col);
    exec::ProgramStep step;
    step.op = static_cast<exec::OpId>(opi);
    step.column = op_takes_column(step.op) ? coli : -1;
    out.program.steps.push_back(step);
    for (auto& p : passes)
      p->push(p->one_hot(exec::kNumOps, opi), p->one_hot(C, coli));
  }

  exec::PivotSet piv;
  for (auto& p : passes) {
    piv.gt += p->pivots().gt / k;
    piv.lt += p->pivots().lt / k;
    piv.ge += p->pivots().ge / k;
    piv.le += p->pivots().le / k;
  }
  out.pivots = piv;
  out.answer =
      exec::run_program_hard(out.program, *ctx0.table, ctx0.match, piv).answer;
  return out;
}

}  // namespace tqp::model
