// SPDX-License-Identifier: Apache-2.0
#include "tableprog/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tableprog/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tqp::tbl {

namespace {

[[noreturn]] void fail(const std::string& path, int64_t line,
                       const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_missing_marker(const std::string& raw) {
  std::string s = lower(raw);
  return s.empty() || s == "n/a" || s == "na";
}

void set_numeric_cell(Column& col, const std::string& raw,
                      const std::string& path, int64_t line) {
  if (is_missing_marker(raw)) {
    col.number.push_back(std::numeric_limits<double>::quiet_NaN());
    col.present.push_back(0);
    col.text.push_back("");
    return;
  }
  auto num = parse_number(raw);
  if (!num) fail(path, line, "cell '" + raw + "' is not numeric");
  col.number.push_back(*num);
  col.present.push_back(1);
  col.text.push_back(number_to_string(*num));
}

void set_text_cell(Column& col, const std::string& raw) {
  col.number.push_back(std::numeric_limits<double>::quiet_NaN());
  col.present.push_back(0);
  col.text.push_back(normalize_phrase(raw));
}

}  // namespace

Table load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open table file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty table file");
  std::vector<std::string> names = split_tabs(line);
  if (!std::getline(in, line)) fail(path, 2, "missing column kinds line");
  std::vector<std::string> kinds = split_tabs(line);
  if (kinds.size() != names.size())
    fail(path, 2, "expected " + std::to_string(names.size()) +
                      " column kinds, got " + std::to_string(kinds.size()));

  Table t;
  t.id = fs::path(path).stem().string();
  const size_t C = names.size();
  t.cols.resize(C);
  std::vector<std::vector<std::string>> raw_cells(C);

  int64_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() && in.peek() == EOF) break;
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != C)
      fail(path, lineno, "expected " + std::to_string(C) + " fields, got " +
                             std::to_string(fields.size()));
    for (size_t j = 0; j < C; ++j) raw_cells[j].push_back(fields[j]);
    ++t.rows;
  }
  if (t.rows < 1) fail(path, lineno, "table has no rows");

  for (size_t j = 0; j < C; ++j) {
    Column& col = t.cols[j];
    col.name = names[j];
    std::vector<Token> toks = tokenize(names[j]);
    for (const Token& tok : toks) col.name_tokens.push_back(tok.text);
    if (col.name_tokens.empty()) col.name_tokens.push_back(names[j]);

    std::string kind = lower(kinds[j]);
    if (kind == "auto") {
      int64_t nonempty = 0, numeric = 0;
      for (const std::string& raw : raw_cells[j]) {
        if (is_missing_marker(raw)) continue;
        ++nonempty;
        if (parse_number(raw)) ++numeric;
      }
      kind = (nonempty > 0 && numeric * 5 >= nonempty * 4) ? "numeric" : "text";
    }
    if (kind == "numeric") {
      col.kind = ColumnKind::Numeric;
      for (int64_t i = 0; i < t.rows; ++i) {
        const std::string& raw = raw_cells[j][static_cast<size_t>(i)];
        if (lower(kinds[j]) == "auto" && !is_missing_marker(raw) &&
            !parse_number(raw)) {
          // inferred-numeric column: stray text cells become missing
          col.number.push_back(std::numeric_limits<double>::quiet_NaN());
          col.present.push_back(0);
          col.text.push_back("");
        } else {
          set_numeric_cell(col, raw, path, i + 3);
        }
      }
    } else if (kind == "text") {
      col.kind = ColumnKind::Text;
      for (const std::string& raw : raw_cells[j]) set_text_cell(col, raw);
    } else {
      fail(path, 2, "unknown column kind '" + kinds[j] + "'");
    }
  }
  return t;
}

void save_table(const Table& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write table file: " + path);
  const int64_t C = t.num_cols();
  for (int64_t j = 0; j < C; ++j)
    out << t.cols[static_cast<size_t>(j)].name << (j + 1 < C ? '\t' : '\n');
  for (int64_t j = 0; j < C; ++j)
    out << (t.cols[static_cast<size_t>(j)].kind == ColumnKind::Numeric
                ? "numeric"
                : "text")
        << (j + 1 < C ? '\t' : '\n');
  for (int64_t i = 0; i < t.rows; ++i)
    for (int64_t j = 0; j < C; ++j) {
      const Column& col = t.cols[static_cast<size_t>(j)];
      if (col.kind == ColumnKind::Numeric)
        out << (col.present[static_cast<size_t>(i)]
                    ? number_to_string(col.number[static_cast<size_t>(i)])
                    : "");
      else
        out << col.text[static_cast<size_t>(i)];
      out << (j + 1 < C ? '\t' : '\n');
    }
}

std::vector<Example> load_examples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open examples file: " + path);
  std::vector<Example> out;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(path, lineno, std::string("bad json: ") + e.what());
    }
    Example ex;
    try {
      ex.id = j.at("id").get<std::string>();
      ex.raw_question = j.at("question").get<std::string>();
      ex.table_id = j.at("table_id").get<std::string>();
      const json& ans = j.at("answer");
      const std::string kind = ans.at("kind").get<std::string>();
      if (kind == "number") {
        ex.answer = Answer::make_number(ans.at("value").get<double>());
      } else if (kind == "entries") {
        std::vector<std::string> entries;
        for (const json& e : ans.at("value"))
          entries.push_back(normalize_phrase(e.get<std::string>()));
        if (entries.empty()) fail(path, lineno, "entries answer is empty");
        ex.answer = Answer::make_entries(std::move(entries));
      } else {
        fail(path, lineno, "unknown answer kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      fail(path, lineno, std::string("bad example record: ") + e.what());
    }
    ex.question = tokenize(ex.raw_question);
    if (ex.question.empty()) fail(path, lineno, "question has no tokens");
    out.push_back(std::move(ex));
  }
  return out;
}

void save_examples(const std::vector<Example>& examples,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write examples file: " + path);
  for (const Example& ex : examples) {
    json ans;
    if (ex.answer.kind == Answer::Kind::Number) {
      ans = {{"kind", "number"}, {"value", ex.answer.number}};
    } else {
      ans = {{"kind", "entries"}, {"value", ex.answer.entries}};
    }
    json j = {{"id", ex.id},
              {"question", ex.raw_question},
              {"table_id", ex.table_id},
              {"answer", ans}};
    out << j.dump() << '\n';
  }
}

std::vector<Split> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<Split> out;
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    Split s;
    if (!(ss >> s.name >> s.table_dir >> s.examples_file))
      fail(path, lineno, "expected: <split> <table dir> <examples file>");
    out.push_back(std::move(s));
  }
  if (out.empty()) throw std::runtime_error(path + ": manifest lists no splits");
  return out;
}

const Table& Dataset::table_for(const Example& ex) const {
  auto it = tables.find(ex.table_id);
  if (it == tables.end())
    throw std::runtime_error("example " + ex.id + " references unknown table " +
                             ex.table_id);
  return it->second;
}

bool answer_matchable(const Answer& a, const Table& t) {
  if (a.kind != Answer::Kind::Entries) return a.kind == Answer::Kind::Number;
  for (const std::string& item : a.entries) {
    bool found = false;
    for (const Column& col : t.cols)
      for (const std::string& cell : col.text)
        if (!cell.empty() && cell == item) {
          found = true;
          break;
        }
    if (!found) return false;
  }
  return true;
}

Dataset load_dataset(const std::string& manifest_path) {
  Dataset ds;
  std::map<std::string, std::string> id_source;  // table id -> file
  const fs::path base = fs::path(manifest_path).parent_path();
  for (const Split& s : load_manifest(manifest_path)) {
    const fs::path dir = base / s.table_dir;
    if (!fs::is_directory(dir))
      throw std::runtime_error("table dir not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".tsv")
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
      const std::string id = f.stem().string();
      auto src = id_source.find(id);
      if (src != id_source.end()) {
        if (src->second != fs::weakly_canonical(f).string())
          throw std::runtime_error("duplicate table id '" + id + "': " +
                                   src->second + " and " + f.string());
        continue;  // same file listed by several splits
      }
      id_source[id] = fs::weakly_canonical(f).string();
      ds.tables.emplace(id, load_table(f.string()));
    }
    std::vector<Example> exs = load_examples((base / s.examples_file).string());
    for (Example& ex : exs) {
      const Table& t = ds.table_for(ex);
      ex.unanswerable = !answer_matchable(ex.answer, t);
    }
    ds.splits[s.name] = std::move(exs);
  }
  return ds;
}

}  // namespace tqp::tbl
