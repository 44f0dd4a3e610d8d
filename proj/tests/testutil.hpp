// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "tableprog/interpreter.hpp"
#include "tableprog/masks.hpp"
#include "tableprog/ops.hpp"
#include "tableprog/rng.hpp"
#include "tableprog/table.hpp"
#include "tableprog/tensor.hpp"
#include "tableprog/text.hpp"

namespace testutil {

// guarded relative error: the floor keeps finite-difference roundoff
// (~eps*|loss|/h) on near-zero gradients from registering as mismatch
inline double rel_err(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-2});
  return std::fabs(a - b) / denom;
}

inline tqp::tbl::Table random_table(tqp::Rng& rng, int64_t max_rows,
                                    int64_t max_cols,
                                    bool allow_missing = true) {
  using namespace tqp::tbl;
  static const std::vector<std::string> words = {
      "ash", "bay", "elm", "fir", "oak", "yew", "ivy", "sal", "til", "ulm"};
  const int64_t M = rng.range(1, max_rows);
  const int64_t C = rng.range(1, max_cols);
  Table t;
  t.id = "rt";
  t.rows = M;
  for (int64_t j = 0; j < C; ++j) {
    Column col;
    col.name = "c" + std::to_string(j);
    col.name_tokens = {col.name};
    if (rng.bernoulli(0.6)) {
      col.kind = ColumnKind::Numeric;
      for (int64_t i = 0; i < M; ++i) {
        if (allow_missing && rng.bernoulli(0.1)) {
          col.number.push_back(std::numeric_limits<double>::quiet_NaN());
          col.present.push_back(0);
          col.text.push_back("");
        } else {
          // small integer range so duplicates and pivot ties happen
          const double v = static_cast<double>(rng.range(0, 9));
          col.number.push_back(v);
          col.present.push_back(1);
          col.text.push_back(number_to_string(v));
        }
      }
    } else {
      col.kind = ColumnKind::Text;
      for (int64_t i = 0; i < M; ++i) {
        col.number.push_back(std::numeric_limits<double>::quiet_NaN());
        col.present.push_back(0);
        col.text.push_back(words[rng.index(words.size())]);
      }
    }
    t.cols.push_back(std::move(col));
  }
  return t;
}

inline tqp::tbl::MatchResult random_match(tqp::Rng& rng,
                                          const tqp::tbl::Table& t) {
  tqp::tbl::MatchResult m;
  m.rows = t.rows;
  m.cols = t.num_cols();
  m.select.assign(static_cast<size_t>(m.rows * m.cols), 0);
  m.col_match.assign(static_cast<size_t>(m.cols), 0);
  for (int64_t i = 0; i < m.rows; ++i)
    for (int64_t j = 0; j < m.cols; ++j)
      if (rng.bernoulli(0.2)) {
        m.select[static_cast<size_t>(i * m.cols + j)] = 1;
        m.col_match[static_cast<size_t>(j)] = 1;
      }
  return m;
}

inline tqp::exec::PivotSet random_pivots(tqp::Rng& rng) {
  tqp::exec::PivotSet p;
  // offset by 0.5 so pivots never sit exactly on a cell value
  p.gt = static_cast<double>(rng.range(0, 9)) + 0.5;
  p.lt = static_cast<double>(rng.range(0, 9)) + 0.5;
  p.ge = static_cast<double>(rng.range(0, 9));
  p.le = static_cast<double>(rng.range(0, 9));
  return p;
}

inline tqp::exec::Program random_program(tqp::Rng& rng,
                                         const tqp::tbl::Table& t,
                                         int64_t T = 4) {
  tqp::exec::Program p;
  for (int64_t i = 0; i < T; ++i) {
    tqp::exec::ProgramStep s;
    s.op = static_cast<tqp::exec::OpId>(rng.index(tqp::exec::kNumOps));
    if (tqp::exec::op_takes_column(s.op))
      s.column = static_cast<int64_t>(rng.index(t.num_cols()));
    p.steps.push_back(s);
  }
  return p;
}

// Central finite differences against analytic gradients. f rebuilds the
// loss from the parameter tensors; grads are aligned with params.
struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string where;
};

inline GradCheckResult finite_difference_check(
    std::vector<tqp::ad::Tensor>& params,
    const std::function<double(const std::vector<tqp::ad::Tensor>&)>& f,
    const std::vector<tqp::ad::Tensor>& grads, double h = 1e-6) {
  GradCheckResult res;
  for (size_t k = 0; k < params.size(); ++k) {
    for (int64_t i = 0; i < params[k].numel(); ++i) {
      const double keep = params[k][i];
      params[k][i] = keep + h;
      const double up = f(params);
      params[k][i] = keep - h;
      const double dn = f(params);
      params[k][i] = keep;
      const double fd = (up - dn) / (2.0 * h);
      const double re = rel_err(grads[k][i], fd);
      if (re > res.max_rel_err) {
        res.max_rel_err = re;
        res.where = "param " + std::to_string(k) + "[" + std::to_string(i) +
                    "] analytic " + std::to_string(grads[k][i]) + " fd " +
                    std::to_string(fd);
      }
    }
  }
  return res;
}

}  // namespace testutil
