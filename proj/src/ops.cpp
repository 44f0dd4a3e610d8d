// SPDX-License-Identifier: Apache-2.0
#include "tableprog/ops.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace tqp::exec {

namespace {
constexpr const char* kNames[kNumOps] = {
    "count", "select", "mfe",  "argmax", "argmin", ">",     "<",    ">=",
    "<=",    "first",  "last", "previous", "next", "print", "reset"};
}

const char* op_name(OpId op) { return kNames[static_cast<int>(op)]; }

std::optional<OpId> op_from_name(const std::string& name) {
  std::string s;
  for (char c : name)
    s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (int i = 0; i < kNumOps; ++i)
    if (s == kNames[i]) return static_cast<OpId>(i);
  // aliases
  if (s == "gt") return OpId::Gt;
  if (s == "lt") return OpId::Lt;
  if (s == "ge" || s == "geq") return OpId::Ge;
  if (s == "le" || s == "leq") return OpId::Le;
  if (s == "prev") return OpId::Previous;
  return std::nullopt;
}

bool op_takes_column(OpId op) {
  switch (op) {
    case OpId::Count:
    case OpId::First:
    case OpId::Last:
    case OpId::Previous:
    case OpId::Next:
    case OpId::Reset:
      return false;
    default:
      return true;
  }
}

bool op_is_comparison(OpId op) {
  return op == OpId::Gt || op == OpId::Lt || op == OpId::Ge || op == OpId::Le;
}

bool op_is_superlative(OpId op) {
  return op == OpId::Argmax || op == OpId::Argmin;
}

std::string Program::to_text(const std::vector<std::string>& column_names) const {
  std::string out;
  for (size_t i = 0; i < steps.size(); ++i) {
    if (i) out += '/';
    out += op_name(steps[i].op);
    if (op_takes_column(steps[i].op)) {
      out += ':';
      const int64_t c = steps[i].column;
      if (c >= 0 && c < static_cast<int64_t>(column_names.size()))
        out += column_names[static_cast<size_t>(c)];
      else
        out += std::to_string(c);
    }
  }
  return out;
}

bool Program::operator==(const Program& o) const {
  if (steps.size() != o.steps.size()) return false;
  for (size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].op != o.steps[i].op) return false;
    if (op_takes_column(steps[i].op) && steps[i].column != o.steps[i].column)
      return false;
  }
  return true;
}

Program parse_program(const std::string& text,
                      const std::vector<std::string>& column_names) {
  Program prog;
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == '/' || c == '\n') {
      parts.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  parts.push_back(cur);

  int64_t pos = 0;
  for (std::string& part : parts) {
    // trim
    while (!part.empty() && std::isspace(static_cast<unsigned char>(part.front())))
      part.erase(part.begin());
    while (!part.empty() && std::isspace(static_cast<unsigned char>(part.back())))
      part.pop_back();
    if (part.empty()) continue;
    ++pos;

    std::string opname = part, colname;
    const size_t colon = part.find(':');
    if (colon != std::string::npos) {
      opname = part.substr(0, colon);
      colname = part.substr(colon + 1);
    }
    auto op = op_from_name(opname);
    if (!op)
      throw std::invalid_argument("step " + std::to_string(pos) +
                                  ": unknown operation '" + opname + "'");
    ProgramStep step;
    step.op = *op;
    if (op_takes_column(*op)) {
      if (colname.empty())
        throw std::invalid_argument("step " + std::to_string(pos) + ": '" +
                                    opname + "' needs a column");
      auto it = std::find(column_names.begin(), column_names.end(), colname);
      if (it != column_names.end()) {
        step.column = it - column_names.begin();
      } else {
        try {
          size_t used = 0;
          step.column = std::stoll(colname, &used);
          if (used != colname.size()) throw std::invalid_argument("");
        } catch (...) {
          throw std::invalid_argument("step " + std::to_string(pos) +
                                      ": unknown column '" + colname + "'");
        }
      }
    } else if (!colname.empty()) {
      throw std::invalid_argument("step " + std::to_string(pos) + ": '" +
                                  opname + "' takes no column");
    }
    prog.steps.push_back(step);
  }
  if (prog.steps.empty()) throw std::invalid_argument("empty program");
  return prog;
}

}  // namespace tqp::exec
