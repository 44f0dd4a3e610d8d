// SPDX-License-Identifier: Apache-2.0
#include "tableprog/interpreter.hpp"

#include <algorithm>
#include <stdexcept>

namespace tqp::exec {

HardTrace run_program_hard(const Program& program, const tbl::Table& table,
                           const tbl::MatchResult& match,
                           const PivotSet& pivots) {
  const int64_t M = table.rows, C = table.num_cols();
  for (const ProgramStep& s : program.steps)
    if (op_takes_column(s.op) && (s.column < 0 || s.column >= C))
      throw std::invalid_argument("program column id out of range");

  const ExecMasks masks = ExecMasks::build(table, match, pivots);

  HardTrace tr;
  std::vector<double> rs(static_cast<size_t>(M), 1.0);
  tr.row_selectors.push_back(rs);

  OpId last_op = OpId::Reset;
  int64_t last_col = -1;

  for (const ProgramStep& step : program.steps) {
    const std::vector<double> prev = rs;
    const int64_t c = step.column;
    last_op = step.op;
    last_col = c;

    auto from_mask = [&](const ad::Tensor& mask) {
      for (int64_t i = 0; i < M; ++i) rs[static_cast<size_t>(i)] = mask.at(i, c);
    };

    switch (step.op) {
      case OpId::Count: {
        tr.scalar = 0.0;
        for (double v : prev) tr.scalar += v;
        std::fill(rs.begin(), rs.end(), 0.0);  // count feeds no selector term
        break;
      }
      case OpId::Print: {
        tr.lookup = ad::Tensor({M, C});
        for (int64_t i = 0; i < M; ++i)
          tr.lookup.at(i, c) = prev[static_cast<size_t>(i)];
        std::fill(rs.begin(), rs.end(), 0.0);
        break;
      }
      case OpId::Select: from_mask(masks.select); break;
      case OpId::Mfe: from_mask(masks.mfe); break;
      case OpId::Gt: from_mask(masks.gt); break;
      case OpId::Lt: from_mask(masks.lt); break;
      case OpId::Ge: from_mask(masks.ge); break;
      case OpId::Le: from_mask(masks.le); break;
      case OpId::Argmax:
      case OpId::Argmin: {
        const ad::Tensor& ord = step.op == OpId::Argmax
                                    ? masks.lt_mat[static_cast<size_t>(c)]
                                    : masks.gt_mat[static_cast<size_t>(c)];
        if (ord.numel() == 0) {
          std::fill(rs.begin(), rs.end(), 0.0);  // text column
          break;
        }
        for (int64_t i = 0; i < M; ++i) {
          double beaten = 0.0;
          for (int64_t k = 0; k < M; ++k)
            beaten += ord.at(i, k) * prev[static_cast<size_t>(k)];
          double v = std::max(0.0, prev[static_cast<size_t>(i)] - beaten);
          rs[static_cast<size_t>(i)] = masks.numeric_present.at(i, c) * v;
        }
        break;
      }
      case OpId::First: {
        double before = 0.0;
        for (int64_t i = 0; i < M; ++i) {
          rs[static_cast<size_t>(i)] =
              std::max(0.0, prev[static_cast<size_t>(i)] - before);
          before += prev[static_cast<size_t>(i)];
        }
        break;
      }
      case OpId::Last: {
        double after = 0.0;
        for (int64_t i = M - 1; i >= 0; --i) {
          rs[static_cast<size_t>(i)] =
              std::max(0.0, prev[static_cast<size_t>(i)] - after);
          after += prev[static_cast<size_t>(i)];
        }
        break;
      }
      case OpId::Previous: {
        for (int64_t i = 0; i < M - 1; ++i)
          rs[static_cast<size_t>(i)] = prev[static_cast<size_t>(i + 1)];
        rs[static_cast<size_t>(M - 1)] = 0.0;
        break;
      }
      case OpId::Next: {
        for (int64_t i = M - 1; i >= 1; --i)
          rs[static_cast<size_t>(i)] = prev[static_cast<size_t>(i - 1)];
        rs[0] = 0.0;
        break;
      }
      case OpId::Reset: {
        std::fill(rs.begin(), rs.end(), 1.0);
        break;
      }
    }
    tr.row_selectors.push_back(rs);
  }

  if (last_op == OpId::Count) {
    tr.answer = tbl::Answer::make_number(tr.scalar);
  } else if (last_op == OpId::Print) {
    std::vector<std::string> entries;
    const std::vector<double>& sel = tr.row_selectors[tr.row_selectors.size() - 2];
    for (int64_t i = 0; i < M; ++i)
      if (sel[static_cast<size_t>(i)] == 1.0)
        entries.push_back(
            table.cols[static_cast<size_t>(last_col)].text[static_cast<size_t>(i)]);
    tr.answer = entries.empty() ? tbl::Answer::none()
                                : tbl::Answer::make_entries(std::move(entries));
  } else {
    tr.answer = tbl::Answer::none();
  }
  return tr;
}

}  // namespace tqp::exec
