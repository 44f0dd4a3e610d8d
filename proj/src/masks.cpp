// SPDX-License-Identifier: Apache-2.0
#include "tableprog/masks.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace tqp::exec {

double PivotSet::get(OpId op) const {
  switch (op) {
    case OpId::Gt: return gt;
    case OpId::Lt: return lt;
    case OpId::Ge: return ge;
    case OpId::Le: return le;
    default: throw std::invalid_argument("pivot requested for non-comparison");
  }
}

void PivotSet::set(OpId op, double v) {
  switch (op) {
    case OpId::Gt: gt = v; break;
    case OpId::Lt: lt = v; break;
    case OpId::Ge: ge = v; break;
    case OpId::Le: le = v; break;
    default: throw std::invalid_argument("pivot set for non-comparison");
  }
}

ExecMasks ExecMasks::build(const tbl::Table& table,
                           const tbl::MatchResult& match,
                           const PivotSet& pivots) {
  const int64_t M = table.rows, C = table.num_cols();
  if (match.rows != M || match.cols != C)
    throw std::invalid_argument("match result does not fit table");

  ExecMasks m;
  m.rows = M;
  m.cols = C;
  m.select = ad::Tensor({M, C});
  m.mfe = ad::Tensor({M, C});
  m.gt = ad::Tensor({M, C});
  m.lt = ad::Tensor({M, C});
  m.ge = ad::Tensor({M, C});
  m.le = ad::Tensor({M, C});
  m.numeric_present = ad::Tensor({M, C});
  m.lt_mat.resize(static_cast<size_t>(C));
  m.gt_mat.resize(static_cast<size_t>(C));

  for (int64_t i = 0; i < M; ++i)
    for (int64_t j = 0; j < C; ++j)
      m.select.at(i, j) = match.sel(i, j) ? 1.0 : 0.0;

  for (int64_t j = 0; j < C; ++j) {
    const tbl::Column& col = table.cols[static_cast<size_t>(j)];

    // most frequent entry, over present cells only; all ties are marked
    std::map<std::string, int64_t> freq;
    for (int64_t i = 0; i < M; ++i) {
      if (col.kind == tbl::ColumnKind::Numeric && !col.present[static_cast<size_t>(i)])
        continue;
      ++freq[col.text[static_cast<size_t>(i)]];
    }
    int64_t best = 0;
    for (const auto& [k, n] : freq) best = std::max(best, n);
    for (int64_t i = 0; i < M; ++i) {
      if (col.kind == tbl::ColumnKind::Numeric && !col.present[static_cast<size_t>(i)])
        continue;
      if (freq[col.text[static_cast<size_t>(i)]] == best) m.mfe.at(i, j) = 1.0;
    }

    if (col.kind != tbl::ColumnKind::Numeric) continue;

    for (int64_t i = 0; i < M; ++i) {
      if (!col.present[static_cast<size_t>(i)]) continue;
      const double v = col.number[static_cast<size_t>(i)];
      m.numeric_present.at(i, j) = 1.0;
      m.gt.at(i, j) = v > pivots.gt ? 1.0 : 0.0;
      m.lt.at(i, j) = v < pivots.lt ? 1.0 : 0.0;
      m.ge.at(i, j) = v >= pivots.ge ? 1.0 : 0.0;
      m.le.at(i, j) = v <= pivots.le ? 1.0 : 0.0;
    }

    ad::Tensor ltm({M, M}), gtm({M, M});
    for (int64_t i = 0; i < M; ++i) {
      if (!col.present[static_cast<size_t>(i)]) continue;
      for (int64_t k = 0; k < M; ++k) {
        if (!col.present[static_cast<size_t>(k)]) continue;
        const double vi = col.number[static_cast<size_t>(i)];
        const double vk = col.number[static_cast<size_t>(k)];
        if (vi < vk) ltm.at(i, k) = 1.0;
        if (vi > vk) gtm.at(i, k) = 1.0;
      }
    }
    m.lt_mat[static_cast<size_t>(j)] = std::move(ltm);
    m.gt_mat[static_cast<size_t>(j)] = std::move(gtm);
  }
  return m;
}

PivotSet compute_pivots(const std::vector<double>& values,
                        const std::vector<const ad::Tensor*>& states,
                        const ad::Tensor& queries) {
  if (values.size() != states.size())
    throw std::invalid_argument("pivot values/states size mismatch");
  PivotSet out;  // zeros when no number tokens
  if (values.empty()) return out;
  const int64_t d = queries.cols();
  const OpId ops[4] = {OpId::Gt, OpId::Lt, OpId::Ge, OpId::Le};
  for (int q = 0; q < 4; ++q) {
    std::vector<double> scores(values.size());
    double mx = -1e300;
    for (size_t p = 0; p < values.size(); ++p) {
      double s = 0.0;
      for (int64_t k = 0; k < d; ++k) s += queries.at(q, k) * (*states[p])[k];
      scores[p] = s;
      mx = std::max(mx, s);
    }
    double z = 0.0;
    for (double& s : scores) {
      s = std::exp(s - mx);
      z += s;
    }
    double pivot = 0.0;
    for (size_t p = 0; p < values.size(); ++p)
      pivot += scores[p] / z * values[p];
    out.set(ops[q], pivot);
  }
  return out;
}

}  // namespace tqp::exec
