// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "tableprog/loss.hpp"
#include "tableprog/rng.hpp"

using namespace tqp;
using ad::Graph;
using ad::Node;
using ad::Tensor;
using train::AnswerTarget;
using train::LossConfig;

namespace {

tbl::Table small_table() {
  tbl::Table t;
  t.id = "t";
  t.rows = 2;
  tbl::Column name;
  name.name = "name";
  name.name_tokens = {"name"};
  name.kind = tbl::ColumnKind::Text;
  name.text = {"cuba", "brazil"};
  name.number.assign(2, 0.0);
  name.present.assign(2, 0);
  tbl::Column score;
  score.name = "score";
  score.name_tokens = {"score"};
  score.kind = tbl::ColumnKind::Numeric;
  score.number = {7, 3};
  score.present = {1, 1};
  score.text = {"7", "3"};
  t.cols = {name, score};
  return t;
}

}  // namespace

TEST_CASE("scalar loss formula and skip threshold") {
  LossConfig cfg;
  Graph g;
  auto exact = train::loss_scalar(g, g.scalar(3.0), 3.0, 5, cfg);
  CHECK(exact.loss->value[0] == 0.0);
  CHECK_FALSE(exact.skip);

  auto off = train::loss_scalar(g, g.scalar(5.0), 3.0, 2, cfg);
  CHECK(off.loss->value[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(off.skip);

  auto huge = train::loss_scalar(g, g.scalar(1000.0), 0.0, 1, cfg);
  CHECK(huge.skip);

  // threshold applies after the divide by M
  LossConfig tight = cfg;
  tight.scalar_skip_threshold = 0.9;
  auto edge = train::loss_scalar(g, g.scalar(5.0), 3.0, 2, tight);
  CHECK(edge.skip);  // 1.0 > 0.9
  auto edge2 = train::loss_scalar(g, g.scalar(5.0), 3.0, 4, tight);
  CHECK_FALSE(edge2.skip);  // 0.5 <= 0.9
}

TEST_CASE("lookup loss on a 1x1 table") {
  tbl::Table t;
  t.id = "one";
  t.rows = 1;
  tbl::Column c;
  c.name = "x";
  c.name_tokens = {"x"};
  c.kind = tbl::ColumnKind::Text;
  c.text = {"a"};
  c.number = {0.0};
  c.present = {0};
  t.cols = {c};
  AnswerTarget target = train::prepare_target(
      tbl::Answer::make_entries({"a"}), t);
  REQUIRE(target.trainable);
  Graph g;
  Node* lookup = g.constant(Tensor({1, 1}, {0.8}));
  Node* loss = train::loss_lookup(g, lookup, target, LossConfig{});
  // single matching cell, no negative cells
  CHECK(loss->value[0] == doctest::Approx(-std::log(0.8)).epsilon(1e-12));
  CHECK(loss->value[0] == doctest::Approx(0.22314).epsilon(1e-4));
}

TEST_CASE("lookup loss approaches zero for a clamped perfect prediction") {
  tbl::Table t = small_table();
  AnswerTarget target =
      train::prepare_target(tbl::Answer::make_entries({"cuba"}), t);
  Graph g;
  Tensor perfect({2, 2});
  perfect.at(0, 0) = 1.0;  // cuba cell
  Node* loss = train::loss_lookup(g, g.constant(perfect), target, LossConfig{});
  CHECK(std::fabs(loss->value[0]) < 1e-10);
}

TEST_CASE("lookup loss takes the highest-probability entry per item") {
  tbl::Table t;
  t.id = "dup";
  t.rows = 3;
  tbl::Column c;
  c.name = "g";
  c.name_tokens = {"g"};
  c.kind = tbl::ColumnKind::Text;
  c.text = {"x", "y", "x"};  // item in rows 0 and 2
  c.number.assign(3, 0.0);
  c.present.assign(3, 0);
  t.cols = {c};
  AnswerTarget target =
      train::prepare_target(tbl::Answer::make_entries({"x"}), t);
  Graph g;
  Tensor lk({3, 1});
  lk.at(0, 0) = 0.3;
  lk.at(1, 0) = 0.05;
  lk.at(2, 0) = 0.6;
  Node* lookup = g.leaf(lk, true);
  Node* loss = train::loss_lookup(g, lookup, target, LossConfig{});
  const double expect =
      -std::log(0.6) - (1.0 / 3.0) * std::log(1.0 - 0.05);
  CHECK(loss->value[0] == doctest::Approx(expect).epsilon(1e-12));
  // gradient flows through the argmin entry and the negative entry only
  g.backward(loss);
  CHECK(lookup->grad.at(0, 0) == 0.0);
  CHECK(lookup->grad.at(2, 0) != 0.0);
  CHECK(lookup->grad.at(1, 0) != 0.0);
}

TEST_CASE("soft_min is smooth, bounded, and converges to min") {
  Graph g;
  Node* both = train::soft_min(g, g.scalar(0.0), g.scalar(0.0), 1.0);
  CHECK(both->value[0] == 0.0);

  Node* far = train::soft_min(g, g.scalar(0.0), g.scalar(10.0), 1.0);
  // w = softmax(0, -10); value = 10 * e^-10/(1+e^-10)
  const double w1 = std::exp(-10.0) / (1.0 + std::exp(-10.0));
  CHECK(far->value[0] == doctest::Approx(10.0 * w1).epsilon(1e-10));
  CHECK(far->value[0] == doctest::Approx(4.54e-4).epsilon(1e-2));

  Node* sharp = train::soft_min(g, g.scalar(2.0), g.scalar(5.0), 0.01);
  CHECK(std::fabs(sharp->value[0] - 2.0) < 1e-9);

  // bounds over random pairs
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const double a = rng.uniform(-20, 20), b = rng.uniform(-20, 20);
    const double tau = rng.uniform(0.05, 5.0);
    Graph gg;
    const double v =
        train::soft_min(gg, gg.scalar(a), gg.scalar(b), tau)->value[0];
    CHECK(v >= std::min(a, b) - 1e-12);
    CHECK(v <= std::max(a, b) + 1e-12);
  }
  CHECK_THROWS_AS(train::soft_min(g, g.scalar(1.0), g.scalar(2.0), 0.0),
                  std::invalid_argument);
}

TEST_CASE("total loss branches") {
  tbl::Table t = small_table();
  LossConfig cfg;
  cfg.weight_decay = 0.0;

  Graph g;
  Node* scalar = g.scalar(1.5);
  Tensor lk({2, 2});
  lk.at(0, 0) = 0.2;
  lk.at(0, 1) = 0.1;
  lk.at(1, 0) = 0.3;
  lk.at(1, 1) = 0.4;
  Node* lookup = g.constant(lk);

  // entries answer: scale * L_lookup
  AnswerTarget entries =
      train::prepare_target(tbl::Answer::make_entries({"brazil"}), t);
  auto tl1 = train::total_loss(g, scalar, lookup, entries, cfg, {});
  Node* ll = train::loss_lookup(g, lookup, entries, cfg);
  CHECK(tl1.loss->value[0] ==
        doctest::Approx(50.0 * ll->value[0]).epsilon(1e-12));

  // number absent from the table: pure scalar branch, L = (1.5-2)^2 / (2*2)
  AnswerTarget off_table = train::prepare_target(tbl::Answer::make_number(2), t);
  CHECK_FALSE(off_table.number_in_table);
  auto tl2 = train::total_loss(g, scalar, lookup, off_table, cfg, {});
  REQUIRE_FALSE(tl2.skipped);
  CHECK(tl2.loss->value[0] == doctest::Approx(0.0625).epsilon(1e-12));

  // number present in the table: soft minimum of the two
  AnswerTarget in_table = train::prepare_target(tbl::Answer::make_number(7), t);
  CHECK(in_table.number_in_table);
  auto tl3 = train::total_loss(g, scalar, lookup, in_table, cfg, {});
  REQUIRE_FALSE(tl3.skipped);
  Node* ls = train::loss_scalar(g, scalar, 7.0, 2, cfg).loss;
  Node* lk7 = g.scale(train::loss_lookup(g, lookup, in_table, cfg), 50.0);
  Node* sm = train::soft_min(g, ls, lk7, cfg.softmin_tau);
  CHECK(tl3.loss->value[0] == doctest::Approx(sm->value[0]).epsilon(1e-12));
}

TEST_CASE("number-not-in-table skip zeroes the example") {
  tbl::Table t = small_table();
  LossConfig cfg;
  Graph g;
  Node* scalar = g.scalar(500.0);
  Node* lookup = g.constant(Tensor({2, 2}));
  AnswerTarget target = train::prepare_target(tbl::Answer::make_number(99), t);
  auto tl = train::total_loss(g, scalar, lookup, target, cfg, {});
  CHECK(tl.skipped);
  CHECK(tl.loss == nullptr);
}

TEST_CASE("weight decay adds half lambda norm squared") {
  tbl::Table t = small_table();
  LossConfig cfg;
  cfg.weight_decay = 0.5;
  Graph g;
  Node* p1 = g.leaf(Tensor({2}, {1.0, 2.0}), true);
  Node* p2 = g.leaf(Tensor({1}, {3.0}), true);
  std::vector<Node*> params = {p1, p2};
  AnswerTarget target =
      train::prepare_target(tbl::Answer::make_entries({"cuba"}), t);
  Tensor lk({2, 2});
  lk.at(0, 0) = 0.5;
  Node* lookup = g.constant(lk);
  auto with = train::total_loss(g, g.scalar(0.0), lookup, target, cfg, params);
  LossConfig nodecay = cfg;
  nodecay.weight_decay = 0.0;
  auto without =
      train::total_loss(g, g.scalar(0.0), lookup, target, nodecay, params);
  CHECK(with.loss->value[0] - without.loss->value[0] ==
        doctest::Approx(0.25 * (1 + 4 + 9)).epsilon(1e-12));
}

TEST_CASE("prepare_target flags untrainable entries") {
  tbl::Table t = small_table();
  AnswerTarget bad =
      train::prepare_target(tbl::Answer::make_entries({"nowhere"}), t);
  CHECK_FALSE(bad.trainable);
  AnswerTarget good =
      train::prepare_target(tbl::Answer::make_entries({"cuba", "7"}), t);
  CHECK(good.trainable);
  REQUIRE(good.match_sets.size() == 2);
  CHECK(good.g.at(0, 0) == 1.0);  // cuba
  CHECK(good.g.at(0, 1) == 1.0);  // numeric 7 as text
  CHECK(good.g.at(1, 0) == 0.0);
}
