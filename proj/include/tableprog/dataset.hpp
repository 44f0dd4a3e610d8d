// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "tableprog/table.hpp"

namespace tqp::tbl {

// Table file format: UTF-8 TSV. Line 1: column names. Line 2: column kinds
// (numeric|text|auto; auto infers numeric when >= 80% of nonempty cells
// parse as numbers). Lines 3+: rows. Missing numeric cell: empty field or
// "n/a" (case-insensitive).
Table load_table(const std::string& path);
void save_table(const Table& t, const std::string& path);

// Examples: JSON Lines {id, question, table_id,
//                       answer:{kind:"number"|"entries", value}}
std::vector<Example> load_examples(const std::string& path);
void save_examples(const std::vector<Example>& examples,
                   const std::string& path);

struct Split {
  std::string name;
  std::string table_dir;      // relative to the manifest
  std::string examples_file;  // relative to the manifest
};

// Manifest: one line per split, tab separated:
//   <split name> <table dir> <examples file>
// '#' lines are comments.
std::vector<Split> load_manifest(const std::string& path);

struct Dataset {
  std::map<std::string, Table> tables;  // id -> table
  std::map<std::string, std::vector<Example>> splits;

  const Table& table_for(const Example& ex) const;
};

// Loads every split in the manifest. Flags examples unanswerable when the
// answer is neither a number nor a list of phrases all present in the
// table.
Dataset load_dataset(const std::string& manifest_path);

// true when every entry of an entries answer matches at least one cell
bool answer_matchable(const Answer& a, const Table& t);

}  // namespace tqp::tbl
