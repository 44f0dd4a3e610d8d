// SPDX-License-Identifier: Apache-2.0
#include "tableprog/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "tableprog/dataset.hpp"
#include "tableprog/interpreter.hpp"
#include "tableprog/rng.hpp"
#include "tableprog/text.hpp"

namespace fs = std::filesystem;

namespace tqp::tbl {

namespace {

using exec::OpId;
using exec::Program;
using exec::ProgramStep;

const std::vector<std::string> kNameEntities = {
    "alder",  "birch",   "cedar",  "maple",  "aspen",  "willow", "rowan",
    "hazel",  "juniper", "laurel", "poplar", "spruce", "walnut", "linden",
    "holly",  "clover",  "heather", "jasmine", "lotus", "orchid", "peony",
    "tulip",  "violet",  "zinnia", "dahlia", "falcon", "heron",  "crane",
    "finch",  "robin",   "sparrow", "wren",  "plover", "osprey", "kestrel",
    "merlin", "harrier", "raven",  "magpie", "lark",   "dove",   "teal",
    "gannet", "puffin",  "curlew", "avocet", "brant",  "dunlin", "eider",
    "fulmar", "godwit",  "grebe",  "knot",   "murre",  "noddy",  "petrel"};

const std::vector<std::string> kAdjectives = {"red",    "blue",  "green",
                                              "black",  "white", "silver",
                                              "golden"};

const std::vector<std::string> kGroups = {"ember",  "frost",  "storm",
                                          "breeze", "stone",  "river",
                                          "meadow", "summit", "harbor",
                                          "prairie"};

const std::vector<std::string> kNameCols = {"name",     "team",   "player",
                                            "item",     "swimmer", "opponent",
                                            "engine",   "section"};
const std::vector<std::string> kGroupCols = {"group",    "league", "division",
                                             "category", "nation", "class"};
const std::vector<std::string> kNumCols = {"score",      "points", "wins",
                                           "losses",     "attendance",
                                           "distance",   "weight", "height",
                                           "speed",      "laps"};

// cell values are three digits so row counts never occur in the table and
// count questions cannot be answered by table lookup
const std::vector<int64_t> kThresholds = {200, 300, 400, 500, 600, 700, 800};

struct CmpSpec {
  OpId op;
  std::vector<std::string> phrases;
};
const std::vector<CmpSpec> kComparisons = {
    {OpId::Gt, {"greater than", "more than", "above"}},
    {OpId::Lt, {"less than", "fewer than", "below"}},
    {OpId::Ge, {"at least", "no less than"}},
    {OpId::Le, {"at most", "no more than"}},
};

struct Draft {
  Table table;
  std::string question;
  Program program;
  std::string pattern;
};

struct ColumnsInfo {
  int64_t name_col = 0, group_col = 1;
  std::vector<int64_t> num_cols;
};

Table make_table(Rng& rng, const GenOptions& opt, int64_t index,
                 ColumnsInfo& info) {
  const int64_t M = rng.range(opt.min_rows, opt.max_rows);
  const int64_t num_numeric =
      rng.range(opt.min_numeric_cols, opt.max_numeric_cols);

  Table t;
  t.id = "t" + std::to_string(index);
  t.rows = M;

  auto add_text_col = [&](const std::string& name) -> Column& {
    Column c;
    c.name = name;
    c.name_tokens = {name};
    c.kind = ColumnKind::Text;
    t.cols.push_back(std::move(c));
    return t.cols.back();
  };

  // unique entities for the name column; some are two-token phrases
  Column& names = add_text_col(rng.pick(kNameCols));
  std::vector<std::string> pool = kNameEntities;
  rng.shuffle(pool);
  for (int64_t i = 0; i < M; ++i) {
    std::string cell = pool[static_cast<size_t>(i)];
    if (rng.bernoulli(0.15)) cell = rng.pick(kAdjectives) + " " + cell;
    names.text.push_back(cell);
    names.number.push_back(std::numeric_limits<double>::quiet_NaN());
    names.present.push_back(0);
  }

  Column& groups = add_text_col(rng.pick(kGroupCols));
  for (int64_t i = 0; i < M; ++i) {
    groups.text.push_back(kGroups[rng.index(4)]);  // few values, so they repeat
    groups.number.push_back(std::numeric_limits<double>::quiet_NaN());
    groups.present.push_back(0);
  }

  std::vector<std::string> numeric_names = kNumCols;
  rng.shuffle(numeric_names);
  std::vector<int64_t> values;
  for (int64_t v = 101; v <= 999; v += 2) values.push_back(v);
  for (int64_t k = 0; k < num_numeric; ++k) {
    Column c;
    c.name = numeric_names[static_cast<size_t>(k)];
    c.name_tokens = {c.name};
    c.kind = ColumnKind::Numeric;
    rng.shuffle(values);
    for (int64_t i = 0; i < M; ++i) {
      if (rng.bernoulli(opt.missing_cell_prob)) {
        c.number.push_back(std::numeric_limits<double>::quiet_NaN());
        c.present.push_back(0);
        c.text.push_back("");
      } else {
        const double v = static_cast<double>(values[static_cast<size_t>(i)]);
        c.number.push_back(v);
        c.present.push_back(1);
        c.text.push_back(number_to_string(v));
      }
    }
    t.cols.push_back(std::move(c));
  }

  info.name_col = 0;
  info.group_col = 1;
  info.num_cols.clear();
  for (int64_t j = 2; j < t.num_cols(); ++j) info.num_cols.push_back(j);
  return t;
}

Program fill_program(std::vector<ProgramStep> tail) {
  Program p;
  const size_t lead = 4 - tail.size();
  for (size_t i = 0; i < lead; ++i) p.steps.push_back({OpId::Reset, -1});
  for (ProgramStep s : tail) p.steps.push_back(s);
  return p;
}

const std::string& col_name(const Table& t, int64_t j) {
  return t.cols[static_cast<size_t>(j)].name;
}

int64_t pick_entity_row(Rng& rng, int64_t lo, int64_t hi) {
  return rng.range(lo, hi);
}

Draft make_draft(Rng& rng, const GenOptions& opt, int64_t index, int variant) {
  Draft d;
  ColumnsInfo info;
  d.table = make_table(rng, opt, index, info);
  const Table& t = d.table;
  const int64_t M = t.rows;
  const int64_t name_c = info.name_col, group_c = info.group_col;
  const int64_t num_c = info.num_cols[rng.index(info.num_cols.size())];
  const int64_t num_c2 = info.num_cols[rng.index(info.num_cols.size())];
  (void)num_c2;

  const std::string& ncol = col_name(t, name_c);
  const std::string& gcol = col_name(t, group_c);
  const std::string& vcol = col_name(t, num_c);

  auto entity = [&](int64_t row) {
    return t.cols[static_cast<size_t>(name_c)].text[static_cast<size_t>(row)];
  };
  auto group_of = [&](int64_t row) {
    return t.cols[static_cast<size_t>(group_c)].text[static_cast<size_t>(row)];
  };

  switch (variant) {
    case 0: {  // count over all rows
      d.pattern = "count";
      d.question = rng.bernoulli(0.5)
                       ? "how many " + ncol + " entries are there ?"
                       : "what is the total number of " + ncol + " rows ?";
      d.program = fill_program({{OpId::Count, -1}});
      break;
    }
    case 1: {  // comparison + count
      d.pattern = "comparison_count";
      const CmpSpec& cmp = kComparisons[rng.index(kComparisons.size())];
      const int64_t thr = kThresholds[rng.index(kThresholds.size())];
      d.question = "how many rows have " + vcol + " " +
                   cmp.phrases[rng.index(cmp.phrases.size())] + " " +
                   std::to_string(thr) + " ?";
      d.program = fill_program({{cmp.op, num_c}, {OpId::Count, -1}});
      break;
    }
    case 2: {  // select + count
      d.pattern = "select_count";
      const std::string g = group_of(pick_entity_row(rng, 0, M - 1));
      d.question = rng.bernoulli(0.5)
                       ? "how many rows show " + g + " ?"
                       : "how many times does " + g + " appear ?";
      d.program = fill_program({{OpId::Select, group_c}, {OpId::Count, -1}});
      break;
    }
    case 3: {  // most frequent entry + print
      d.pattern = "mfe_print";
      d.question = rng.bernoulli(0.5)
                       ? "which " + gcol + " is the most common ?"
                       : "what " + gcol + " appears most often ?";
      d.program = fill_program({{OpId::Mfe, group_c}, {OpId::Print, group_c}});
      break;
    }
    case 4: {  // first/last + print
      d.pattern = "first_last_print";
      const bool last = rng.bernoulli(0.5);
      d.question = rng.bernoulli(0.5)
                       ? "which " + ncol + " is listed " +
                             (last ? "last" : "first") + " ?"
                       : "what " + ncol + " comes " + (last ? "last" : "first") +
                             " in the table ?";
      d.program =
          fill_program({{last ? OpId::Last : OpId::First, -1},
                        {OpId::Print, name_c}});
      break;
    }
    case 5: {  // superlative + print
      d.pattern = "superlative_print";
      const bool max = rng.bernoulli(0.5);
      if (rng.bernoulli(0.5)) {
        // print the compared column itself
        d.question = rng.bernoulli(0.5)
                         ? "what is the " + std::string(max ? "highest" : "lowest") +
                               " " + vcol + " ?"
                         : "what is the " +
                               std::string(max ? "largest" : "smallest") + " " +
                               vcol + " in the table ?";
        d.program = fill_program(
            {{max ? OpId::Argmax : OpId::Argmin, num_c}, {OpId::Print, num_c}});
      } else {
        d.question =
            rng.bernoulli(0.5)
                ? "which " + ncol + " has the " + (max ? "highest" : "lowest") +
                      " " + vcol + " ?"
                : "what " + ncol + " shows the " +
                      (max ? "largest" : "smallest") + " " + vcol + " ?";
        d.program = fill_program(
            {{max ? OpId::Argmax : OpId::Argmin, num_c}, {OpId::Print, name_c}});
      }
      break;
    }
    case 6: {  // select + print
      d.pattern = "select_print";
      const int64_t row = pick_entity_row(rng, 0, M - 1);
      if (rng.bernoulli(0.5)) {
        // print the matched column itself
        d.question = rng.bernoulli(0.5)
                         ? "which " + ncol + " matches " + entity(row) + " ?"
                         : "which " + ncol + " row is " + entity(row) + " ?";
        d.program =
            fill_program({{OpId::Select, name_c}, {OpId::Print, name_c}});
      } else {
        const int64_t out_c = rng.bernoulli(0.5) ? group_c : num_c;
        d.question = rng.bernoulli(0.5)
                         ? "what is the " + col_name(t, out_c) + " of " +
                               entity(row) + " ?"
                         : "what " + col_name(t, out_c) + " does " +
                               entity(row) + " have ?";
        d.program =
            fill_program({{OpId::Select, name_c}, {OpId::Print, out_c}});
      }
      break;
    }
    case 7: {  // select within a group, then superlative + print
      d.pattern = "select_superlative_print";
      const std::string g = group_of(pick_entity_row(rng, 0, M - 1));
      const bool max = rng.bernoulli(0.5);
      d.question = "which " + ncol + " in " + g + " has the " +
                   (max ? "highest" : "lowest") + " " + vcol + " ?";
      Program p;
      p.steps = {{OpId::Reset, -1},
                 {OpId::Select, group_c},
                 {max ? OpId::Argmax : OpId::Argmin, num_c},
                 {OpId::Print, name_c}};
      d.program = p;
      break;
    }
    case 8: {  // select, next, last + print
      d.pattern = "select_next_print";
      const int64_t row = pick_entity_row(rng, 0, M - 2);
      const int64_t out_c = rng.bernoulli(0.5) ? name_c : group_c;
      d.question = rng.bernoulli(0.5)
                       ? "which " + col_name(t, out_c) + " is listed after " +
                             entity(row) + " ?"
                       : "what " + col_name(t, out_c) + " comes after " +
                             entity(row) + " ?";
      Program p;
      p.steps = {{OpId::Select, name_c},
                 {OpId::Next, -1},
                 {OpId::Last, -1},
                 {OpId::Print, out_c}};
      d.program = p;
      break;
    }
    case 9: {  // select, previous, first + print
      d.pattern = "select_previous_print";
      const int64_t row = pick_entity_row(rng, 1, M - 1);
      const int64_t out_c = rng.bernoulli(0.5) ? name_c : group_c;
      d.question = rng.bernoulli(0.5)
                       ? "which " + col_name(t, out_c) + " is listed before " +
                             entity(row) + " ?"
                       : "what " + col_name(t, out_c) + " comes before " +
                             entity(row) + " ?";
      Program p;
      p.steps = {{OpId::Select, name_c},
                 {OpId::Previous, -1},
                 {OpId::First, -1},
                 {OpId::Print, out_c}};
      d.program = p;
      break;
    }
    default:
      throw std::logic_error("bad pattern variant");
  }
  return d;
}

bool answer_ok(const Answer& a) {
  if (a.kind == Answer::Kind::Number) return std::isfinite(a.number);
  if (a.kind == Answer::Kind::Entries) {
    if (a.entries.empty()) return false;
    for (const std::string& e : a.entries)
      if (e.empty()) return false;
    return true;
  }
  return false;
}

}  // namespace

GenResult gen_synthetic(uint64_t seed, int64_t n_examples,
                        const GenOptions& opt) {
  if (n_examples < 1)
    throw std::invalid_argument("gen_synthetic: n_examples must be >= 1");
  if (opt.min_rows < 2 || opt.max_rows < opt.min_rows ||
      opt.min_numeric_cols < 1 || opt.max_numeric_cols < opt.min_numeric_cols)
    throw std::invalid_argument("gen_synthetic: bad table shape ranges");

  Rng rng(mix64(seed, 0x67656e));
  GenResult out;
  // Interleaved pattern schedule. The positional and select families get
  // extra weight: they are the slowest programs to induce from answers
  // alone. Length 27 is coprime with the 50-example dev-split period, so
  // every family lands in both splits.
  constexpr int kSchedule[27] = {6, 4, 1, 8, 0, 5, 9, 6, 2, 3, 8, 1, 4, 7,
                                 0, 6, 9, 5, 2, 8, 1, 4, 9, 0, 6, 5, 7};

  for (int64_t i = 0; i < n_examples; ++i) {
    const int variant = kSchedule[i % 27];
    for (int attempt = 0;; ++attempt) {
      Draft d = make_draft(rng, opt, i, variant);
      const std::vector<Token> qtoks = tokenize(d.question);
      const MatchResult match = match_and_anonymize(qtoks, d.table);
      exec::PivotSet pivots;
      // synthetic questions carry at most one number; it is the pivot
      for (const Token& tk : qtoks)
        if (tk.is_number) pivots = exec::PivotSet::uniform(tk.value);
      const exec::HardTrace tr =
          exec::run_program_hard(d.program, d.table, match, pivots);
      if (!answer_ok(tr.answer)) {
        if (attempt > 200)
          throw std::runtime_error("gen_synthetic: cannot realize pattern " +
                                   d.pattern);
        continue;
      }
      Example ex;
      ex.id = "ex" + std::to_string(i);
      ex.raw_question = d.question;
      ex.question = qtoks;
      ex.table_id = d.table.id;
      ex.answer = tr.answer;
      out.tables.push_back(std::move(d.table));
      out.examples.push_back(std::move(ex));
      out.gold_programs.push_back(d.program);
      out.pattern_counts[d.pattern] += 1;
      break;
    }
  }
  return out;
}

std::string write_synthetic_dataset(uint64_t seed, int64_t n_examples,
                                    const std::string& out_dir,
                                    const GenOptions& opt) {
  GenResult r = gen_synthetic(seed, n_examples, opt);

  const fs::path base(out_dir);
  fs::create_directories(base / "tables");
  for (const Table& t : r.tables)
    save_table(t, (base / "tables" / (t.id + ".tsv")).string());

  // patterns cycle with period 10, so split on blocks of 10: every fifth
  // block goes to dev and both splits cover every pattern
  std::vector<Example> train, dev;
  for (size_t i = 0; i < r.examples.size(); ++i) {
    if ((i / 10) % 5 == 4)
      dev.push_back(r.examples[i]);
    else
      train.push_back(r.examples[i]);
  }
  save_examples(train, (base / "train.jsonl").string());
  save_examples(dev, (base / "dev.jsonl").string());

  std::ofstream mf(base / "manifest.txt");
  if (!mf) throw std::runtime_error("cannot write manifest in " + out_dir);
  mf << "# split  table_dir  examples_file\n";
  mf << "train\ttables\ttrain.jsonl\n";
  mf << "dev\ttables\tdev.jsonl\n";

  std::string report = "generated " + std::to_string(r.examples.size()) +
                       " examples (" + std::to_string(train.size()) +
                       " train / " + std::to_string(dev.size()) + " dev)\n";
  for (const auto& [pattern, count] : r.pattern_counts)
    report += "  " + pattern + ": " + std::to_string(count) + "\n";
  return report;
}

}  // namespace tqp::tbl
