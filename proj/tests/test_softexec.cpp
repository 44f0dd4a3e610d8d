// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "tableprog/interpreter.hpp"
#include "tableprog/softops.hpp"
#include "testutil.hpp"

using namespace tqp;
using ad::Graph;
using ad::Node;
using ad::Tensor;
using exec::ExecMasks;
using exec::OpId;
using exec::PivotSet;
using exec::SoftExecutor;

namespace {

Node* one_hot(Graph& g, int64_t size, int64_t idx) {
  Tensor t({size});
  t[idx] = 1.0;
  return g.constant(std::move(t));
}

Tensor vec(std::vector<double> v) {
  const int64_t n = static_cast<int64_t>(v.size());
  return Tensor({n}, std::move(v));
}

tbl::MatchResult empty_match(const tbl::Table& t) {
  tbl::MatchResult m;
  m.rows = t.rows;
  m.cols = t.num_cols();
  m.select.assign(static_cast<size_t>(m.rows * m.cols), 0);
  m.col_match.assign(static_cast<size_t>(m.cols), 0);
  return m;
}

tbl::Table numeric_column_table(std::vector<double> values) {
  tbl::Table t;
  t.id = "n";
  t.rows = static_cast<int64_t>(values.size());
  tbl::Column c;
  c.name = "v";
  c.name_tokens = {"v"};
  c.kind = tbl::ColumnKind::Numeric;
  for (double v : values) {
    c.number.push_back(v);
    c.present.push_back(1);
    c.text.push_back(tbl::number_to_string(v));
  }
  t.cols = {c};
  return t;
}

}  // namespace

TEST_CASE("soft count sums the row selector") {
  tbl::Table t = numeric_column_table({1, 2, 3});
  ExecMasks masks = ExecMasks::build(t, empty_match(t), PivotSet{});
  Graph g;
  SoftExecutor ex(g, masks);
  CHECK(ex.op_count(g.constant(vec({1, 1, 1})))->value[0] == 3.0);
  CHECK(ex.op_count(g.constant(vec({0.5, 0.5, 0})))->value[0] ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ex.op_count(g.constant(vec({0, 0, 0})))->value[0] == 0.0);
}

TEST_CASE("soft superlatives follow the max(0, rs - beaten) form") {
  tbl::Table t = numeric_column_table({3, 1, 2});
  ExecMasks masks = ExecMasks::build(t, empty_match(t), PivotSet{});
  Graph g;
  SoftExecutor ex(g, masks);

  Node* full = ex.op_superlative(OpId::Argmax, g.constant(vec({1, 1, 1})), 0);
  CHECK(full->value.v == std::vector<double>{1, 0, 0});
  Node* part = ex.op_superlative(OpId::Argmax, g.constant(vec({0, 1, 1})), 0);
  CHECK(part->value.v == std::vector<double>{0, 0, 1});
  Node* amin = ex.op_superlative(OpId::Argmin, g.constant(vec({1, 1, 1})), 0);
  CHECK(amin->value.v == std::vector<double>{0, 1, 0});
}

TEST_CASE("comparison masks against pivots") {
  tbl::Table t = numeric_column_table({100, 1500, 2000});
  PivotSet p;
  p.ge = 1500.0;
  ExecMasks masks = ExecMasks::build(t, empty_match(t), p);
  CHECK(masks.ge.at(0, 0) == 0.0);
  CHECK(masks.ge.at(1, 0) == 1.0);
  CHECK(masks.ge.at(2, 0) == 1.0);

  // strict inequality at equality
  tbl::Table t2 = numeric_column_table({0, 0});
  ExecMasks m2 = ExecMasks::build(t2, empty_match(t2), PivotSet{});
  CHECK(m2.gt.at(0, 0) == 0.0);
  CHECK(m2.gt.at(1, 0) == 0.0);

  // pivot below the minimum makes < vacuous
  tbl::Table t3 = numeric_column_table({5, 7});
  PivotSet p3;
  p3.lt = 1.0;
  ExecMasks m3 = ExecMasks::build(t3, empty_match(t3), p3);
  CHECK(m3.lt.at(0, 0) == 0.0);
  CHECK(m3.lt.at(1, 0) == 0.0);
}

TEST_CASE("mfe marks every cell attaining the max frequency") {
  tbl::Table t;
  t.id = "m";
  t.rows = 3;
  tbl::Column c;
  c.name = "g";
  c.name_tokens = {"g"};
  c.kind = tbl::ColumnKind::Text;
  c.text = {"a", "b", "a"};
  c.number.assign(3, 0.0);
  c.present.assign(3, 0);
  t.cols = {c};
  ExecMasks masks = ExecMasks::build(t, empty_match(t), PivotSet{});
  CHECK(masks.mfe.at(0, 0) == 1.0);
  CHECK(masks.mfe.at(1, 0) == 0.0);
  CHECK(masks.mfe.at(2, 0) == 1.0);

  // all-distinct column: every value has max frequency 1
  t.cols[0].text = {"a", "b", "c"};
  ExecMasks m2 = ExecMasks::build(t, empty_match(t), PivotSet{});
  for (int64_t i = 0; i < 3; ++i) CHECK(m2.mfe.at(i, 0) == 1.0);
}

TEST_CASE("positional operations") {
  tbl::Table t = numeric_column_table({1, 2, 3});
  ExecMasks masks = ExecMasks::build(t, empty_match(t), PivotSet{});
  Graph g;
  SoftExecutor ex(g, masks);
  Node* rs = g.constant(vec({0, 1, 1}));
  CHECK(ex.op_positional(OpId::First, rs)->value.v ==
        std::vector<double>{0, 1, 0});
  CHECK(ex.op_positional(OpId::Last, rs)->value.v ==
        std::vector<double>{0, 0, 1});
  CHECK(ex.op_positional(OpId::Previous, rs)->value.v ==
        std::vector<double>{1, 1, 0});
  CHECK(ex.op_positional(OpId::Next, rs)->value.v ==
        std::vector<double>{0, 0, 1});
  tbl::Table t4 = numeric_column_table({1, 2, 3, 4});
  ExecMasks m4 = ExecMasks::build(t4, empty_match(t4), PivotSet{});
  Graph g4;
  SoftExecutor ex4(g4, m4);
  CHECK(ex4.op_positional(OpId::Reset, g4.constant(vec({0, 0.5, 0, 1})))
            ->value.v == std::vector<double>{1, 1, 1, 1});
}

TEST_CASE("row selector update blends operation outputs") {
  tbl::Table t = numeric_column_table({1, 2, 3});
  ExecMasks masks = ExecMasks::build(t, empty_match(t), PivotSet{});
  Graph g;
  SoftExecutor ex(g, masks);
  Node* rs = g.constant(vec({0, 1, 1}));

  // one-hot reset
  Node* out = ex.step_selector(rs, one_hot(g, exec::kNumOps,
                                           static_cast<int64_t>(OpId::Reset)),
                               one_hot(g, 1, 0));
  CHECK(out->value.v == std::vector<double>{1, 1, 1});

  // half reset + half first
  Tensor a_op({exec::kNumOps});
  a_op[static_cast<int64_t>(OpId::Reset)] = 0.5;
  a_op[static_cast<int64_t>(OpId::First)] = 0.5;
  Node* mix = ex.step_selector(rs, g.constant(a_op), one_hot(g, 1, 0));
  CHECK(mix->value[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mix->value[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mix->value[2] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("one-hot select routes the mask column") {
  tbl::Table t;
  t.id = "s";
  t.rows = 2;
  tbl::Column c0, c1;
  c0.name = "a";
  c0.name_tokens = {"a"};
  c0.kind = tbl::ColumnKind::Text;
  c0.text = {"x", "y"};
  c0.number.assign(2, 0.0);
  c0.present.assign(2, 0);
  c1 = c0;
  c1.name = "b";
  c1.name_tokens = {"b"};
  t.cols = {c0, c1};
  tbl::MatchResult m = empty_match(t);
  m.select = {0, 1, 1, 0};  // (0,b) and (1,a)
  m.col_match = {1, 1};
  ExecMasks masks = ExecMasks::build(t, m, PivotSet{});
  Graph g;
  SoftExecutor ex(g, masks);
  Node* rs = g.constant(vec({0, 0}));  // select ignores prior selection
  Node* out = ex.step_selector(
      rs, one_hot(g, exec::kNumOps, static_cast<int64_t>(OpId::Select)),
      one_hot(g, 2, 0));
  CHECK(out->value.v == std::vector<double>{0, 1});
}

TEST_CASE("output variables") {
  tbl::Table t;
  t.id = "o";
  t.rows = 2;
  tbl::Column c0, c1;
  c0.name = "a";
  c0.name_tokens = {"a"};
  c0.kind = tbl::ColumnKind::Text;
  c0.text = {"x", "y"};
  c0.number.assign(2, 0.0);
  c0.present.assign(2, 0);
  c1 = c0;
  c1.name = "b";
  t.cols = {c0, c1};
  ExecMasks masks = ExecMasks::build(t, empty_match(t), PivotSet{});
  Graph g;
  SoftExecutor ex(g, masks);

  // one-hot count: scalar 3... here M=2 so scalar 2, lookup zero
  Node* rs = g.constant(vec({1, 1}));
  Node* aop_count =
      one_hot(g, exec::kNumOps, static_cast<int64_t>(OpId::Count));
  CHECK(ex.scalar_answer(rs, aop_count)->value[0] == 2.0);
  Node* look = ex.lookup_answer(rs, aop_count, one_hot(g, 2, 0));
  for (double v : look->value.v) CHECK(v == 0.0);

  // one-hot print on column 1 with rs=[0,1]
  Node* rs2 = g.constant(vec({0, 1}));
  Node* aop_print =
      one_hot(g, exec::kNumOps, static_cast<int64_t>(OpId::Print));
  Node* look2 = ex.lookup_answer(rs2, aop_print, one_hot(g, 2, 1));
  CHECK(look2->value.at(0, 1) == 0.0);
  CHECK(look2->value.at(1, 1) == 1.0);
  CHECK(look2->value.at(1, 0) == 0.0);

  // mixed: half count, half print, uniform columns, rs=[1,0]
  Tensor mix({exec::kNumOps});
  mix[static_cast<int64_t>(OpId::Count)] = 0.5;
  mix[static_cast<int64_t>(OpId::Print)] = 0.5;
  Node* aop = g.constant(mix);
  Node* acol = g.constant(vec({0.5, 0.5}));
  Node* rs3 = g.constant(vec({1, 0}));
  CHECK(ex.scalar_answer(rs3, aop)->value[0] ==
        doctest::Approx(0.5).epsilon(1e-15));
  Node* look3 = ex.lookup_answer(rs3, aop, acol);
  CHECK(look3->value.at(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(look3->value.at(0, 1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(look3->value.at(1, 0) == 0.0);
  CHECK(look3->value.at(1, 1) == 0.0);
}

TEST_CASE("pivot attention over question numbers") {
  Tensor queries({4, 2});
  // zero queries: uniform attention
  std::vector<double> values = {10.0, 20.0};
  Tensor h1({2}, {0.3, -0.2}), h2({2}, {1.0, 0.5});
  std::vector<const Tensor*> states = {&h1, &h2};
  PivotSet p = exec::compute_pivots(values, states, queries);
  CHECK(p.gt == doctest::Approx(15.0).epsilon(1e-12));

  // single number: every pivot equals it regardless of the query
  Tensor q2({4, 2});
  for (double& v : q2.v) v = 0.7;
  PivotSet p1 = exec::compute_pivots({1500.0}, {&h1}, q2);
  CHECK(p1.gt == 1500.0);
  CHECK(p1.lt == 1500.0);
  CHECK(p1.ge == 1500.0);
  CHECK(p1.le == 1500.0);

  // no numbers: pivots are zero
  PivotSet p0 = exec::compute_pivots({}, {}, queries);
  CHECK(p0.gt == 0.0);
  CHECK(p0.le == 0.0);

  // weighted sum with a non-uniform softmax
  Tensor q3({4, 1});
  q3.at(0, 0) = 1.0;  // query for '>' scores states by their single component
  Tensor s1({1}, {0.0}), s2({1}, {std::log(3.0)});
  PivotSet p3 = exec::compute_pivots({10.0, 20.0}, {&s1, &s2}, q3);
  CHECK(p3.gt == doctest::Approx(0.25 * 10 + 0.75 * 20).epsilon(1e-12));
}

TEST_CASE("soft one-hot execution matches the hard interpreter") {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    tbl::Table t = testutil::random_table(rng, 6, 4);
    tbl::MatchResult m = testutil::random_match(rng, t);
    PivotSet p = testutil::random_pivots(rng);
    exec::Program prog = testutil::random_program(rng, t);

    auto hard = exec::run_program_hard(prog, t, m, p);

    Graph g;
    ExecMasks masks = ExecMasks::build(t, m, p);
    SoftExecutor ex(g, masks);
    Node* rs = ex.initial_selector();
    Node* scalar = nullptr;
    Node* lookup = nullptr;
    size_t step_idx = 1;
    for (const auto& step : prog.steps) {
      Node* aop = one_hot(g, exec::kNumOps, static_cast<int64_t>(step.op));
      Node* acol = one_hot(g, t.num_cols(),
                           step.column >= 0 ? step.column : 0);
      scalar = ex.scalar_answer(rs, aop);
      lookup = ex.lookup_answer(rs, aop, acol);
      rs = ex.step_selector(rs, aop, acol);
      // trajectories agree within 1e-12 at every step
      for (int64_t i = 0; i < t.rows; ++i)
        CHECK(std::fabs(rs->value[i] -
                        hard.row_selectors[step_idx][static_cast<size_t>(i)]) <=
              1e-12);
      ++step_idx;
    }
    if (prog.steps.back().op == OpId::Count)
      CHECK(std::fabs(scalar->value[0] - hard.answer.number) <= 1e-12);
    if (prog.steps.back().op == OpId::Print && hard.lookup.numel() > 0)
      for (int64_t i = 0; i < t.rows; ++i)
        for (int64_t j = 0; j < t.num_cols(); ++j)
          CHECK(std::fabs(lookup->value.at(i, j) - hard.lookup.at(i, j)) <=
                1e-12);
  }
}

TEST_CASE("range preservation and count monotonicity") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    tbl::Table t = testutil::random_table(rng, 6, 4);
    tbl::MatchResult m = testutil::random_match(rng, t);
    ExecMasks masks = ExecMasks::build(t, m, testutil::random_pivots(rng));
    Graph g;
    SoftExecutor ex(g, masks);

    Tensor rs({t.rows});
    for (double& v : rs.v) v = rng.uniform01();
    Tensor aop({exec::kNumOps});
    for (double& v : aop.v) v = rng.uniform01();
    double s = 0;
    for (double v : aop.v) s += v;
    for (double& v : aop.v) v /= s;
    Tensor acol({t.num_cols()});
    for (double& v : acol.v) v = rng.uniform01();
    s = 0;
    for (double v : acol.v) s += v;
    for (double& v : acol.v) v /= s;

    Node* out = ex.step_selector(g.constant(rs), g.constant(aop),
                                 g.constant(acol));
    for (int64_t i = 0; i < t.rows; ++i) {
      CHECK(out->value[i] >= 0.0);
      CHECK(out->value[i] <= 1.0 + 1e-12);
    }

    // count monotonicity: raising the selector never lowers the count
    Tensor rs2 = rs;
    for (double& v : rs2.v) v = std::min(1.0, v + rng.uniform01() * (1.0 - v));
    CHECK(ex.op_count(g.constant(rs2))->value[0] >=
          ex.op_count(g.constant(rs))->value[0] - 1e-15);
  }
}

TEST_CASE("first and last are idempotent under hard selection") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    tbl::Table t = testutil::random_table(rng, 6, 3);
    ExecMasks masks = ExecMasks::build(t, empty_match(t), PivotSet{});
    Graph g;
    SoftExecutor ex(g, masks);
    Tensor rs({t.rows});
    for (double& v : rs.v) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    for (OpId op : {OpId::First, OpId::Last}) {
      Node* once = ex.op_positional(op, g.constant(rs));
      Node* twice = ex.op_positional(op, once);
      CHECK(once->value.v == twice->value.v);
    }
  }
}
