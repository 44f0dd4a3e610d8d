// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tableprog/ops.hpp"
#include "tableprog/table.hpp"

namespace tqp::tbl {

struct GenOptions {
  int64_t min_rows = 4;
  int64_t max_rows = 14;
  int64_t min_numeric_cols = 1;
  int64_t max_numeric_cols = 2;
  double missing_cell_prob = 0.05;
};

struct GenResult {
  std::vector<Table> tables;
  std::vector<Example> examples;
  std::vector<exec::Program> gold_programs;  // aligned; not written to disk
  std::map<std::string, int64_t> pattern_counts;
};

// Deterministic synthetic question/table generator covering the program
// pattern inventory (count; comparison+count; select+count; mfe+print;
// first/last+print; superlative+print; select+print; select followed by a
// positional or superlative, then print). Answers are produced by the hard
// interpreter, so labels are consistent with the operation semantics by
// construction.
GenResult gen_synthetic(uint64_t seed, int64_t n_examples,
                        const GenOptions& opt = GenOptions());

// Writes tables/, train.jsonl, dev.jsonl (every 5th example) and
// manifest.txt under out_dir. Returns a short report with the pattern
// distribution.
std::string write_synthetic_dataset(uint64_t seed, int64_t n_examples,
                                    const std::string& out_dir,
                                    const GenOptions& opt = GenOptions());

}  // namespace tqp::tbl
