// SPDX-License-Identifier: Apache-2.0
//
// Independent brute-force reference for discrete program execution. Written
// directly from the operation definitions as naive loops; shares no
// execution code with the library (table/program structs are plain data).
#pragma once

#include <vector>

#include "tableprog/ops.hpp"
#include "tableprog/table.hpp"

namespace oracle {

struct Result {
  tqp::tbl::Answer answer;
  std::vector<std::vector<double>> selectors;  // after each step
};

Result run(const tqp::exec::Program& program, const tqp::tbl::Table& table,
           const std::vector<uint8_t>& select_mask,  // row-major M x C
           double pivot_gt, double pivot_lt, double pivot_ge, double pivot_le);

}  // namespace oracle
