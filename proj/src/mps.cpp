// Copyright 2026 The lnspolicy Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lnspolicy/mps.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "lnspolicy/errors.hpp"

namespace lns {
namespace {

std::string_view unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '\'' && s.back() == '\'') return s.substr(1, s.size() - 2);
  return s;
}

constexpr const char* kObjRow = "obj";

// Pads `line` to reach column `col` (1-based), keeping at least one space.
void pad_to(std::string& line, std::size_t col) {
  if (line.size() + 1 < col) {
    line.append(col - 1 - line.size(), ' ');
  } else {
    line.push_back(' ');
  }
}

std::string fixed_line(const std::string& f1, const std::string& f2, const std::string& f3 = {},
                       const std::string& f4 = {}, const std::string& f5 = {},
                       const std::string& f6 = {}) {
  std::string line = " " + f1;
  pad_to(line, 5);
  line += f2;
  if (f3.empty()) return line;
  pad_to(line, 15);
  line += f3;
  pad_to(line, 25);
  line += f4;
  if (f5.empty()) return line;
  pad_to(line, 40);
  line += f5;
  pad_to(line, 50);
  line += f6;
  return line;
}

double parse_number(const std::string& token, int line_no) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ParseError("line " + std::to_string(line_no) + ": bad number '" + token + "'");
  return v;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream ss(line);
  std::string t;
  while (ss >> t) tokens.push_back(t);
  return tokens;
}

}  // namespace

std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_mps(std::ostream& out, const IpInstance& instance, std::span<const std::int8_t> fixings) {
  const int n = instance.n_vars();
  const int m = instance.n_cons();
  if (!fixings.empty() && static_cast<int>(fixings.size()) != n)
    throw DimensionError("fixings length does not match n_vars");

  out << "NAME          " << (instance.name().empty() ? "lnspolicy" : instance.name()) << '\n';
  out << "ROWS\n";
  out << fixed_line("N", kObjRow) << '\n';
  for (int j = 0; j < m; ++j) out << fixed_line("L", instance.con_name(j)) << '\n';

  out << "COLUMNS\n";
  out << fixed_line("", "MARKER", "'MARKER'", "", "'INTORG'") << '\n';
  const auto c = instance.objective();
  for (int i = 0; i < n; ++i) {
    const std::string name = instance.var_name(i);
    // Objective first, then constraint entries two per line.
    std::vector<std::pair<std::string, double>> fields;
    if (c[i] != 0.0) fields.emplace_back(kObjRow, c[i]);
    for (const Entry& e : instance.col(i)) fields.emplace_back(instance.con_name(e.index), e.value);
    if (fields.empty()) fields.emplace_back(kObjRow, 0.0);
    for (std::size_t k = 0; k < fields.size(); k += 2) {
      if (k + 1 < fields.size()) {
        out << fixed_line("", name, fields[k].first, format_double(fields[k].second),
                          fields[k + 1].first, format_double(fields[k + 1].second))
            << '\n';
      } else {
        out << fixed_line("", name, fields[k].first, format_double(fields[k].second)) << '\n';
      }
    }
  }
  out << fixed_line("", "MARKER", "'MARKER'", "", "'INTEND'") << '\n';

  out << "RHS\n";
  const auto b = instance.rhs();
  for (int j = 0; j < m; ++j)
    if (b[j] != 0.0) out << fixed_line("", "RHS", instance.con_name(j), format_double(b[j])) << '\n';

  out << "BOUNDS\n";
  for (int i = 0; i < n; ++i) {
    if (!fixings.empty() && fixings[i] >= 0) {
      out << fixed_line("FX", "BND", instance.var_name(i), fixings[i] ? "1" : "0") << '\n';
    } else {
      out << fixed_line("BV", "BND", instance.var_name(i)) << '\n';
    }
  }
  out << "ENDATA\n";
}

std::string to_mps(const IpInstance& instance, std::span<const std::int8_t> fixings) {
  std::ostringstream ss;
  write_mps(ss, instance, fixings);
  return ss.str();
}

void write_mps_file(const std::filesystem::path& path, const IpInstance& instance,
                    std::span<const std::int8_t> fixings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_mps(out, instance, fixings);
  if (!out) throw Error("write failed: " + path.string());
}

MpsModel read_mps(std::istream& in) {
  enum class Section { kNone, kName, kRows, kColumns, kRhs, kRanges, kBounds, kObjSense, kEnd };
  enum class RowKind { kObjective, kFree, kLe, kGe, kEq };

  std::string name;
  std::string objective_row;
  bool maximize = false;
  std::vector<std::string> row_names;
  std::vector<RowKind> row_kinds;
  std::unordered_map<std::string, int> row_index;
  std::vector<std::string> col_names;
  std::unordered_map<std::string, int> col_index;
  std::vector<double> objective;
  std::vector<std::tuple<int, int, double>> entries;  // (row, col, value)
  std::vector<double> row_rhs;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<bool> integer;
  bool in_integer_block = false;

  auto column = [&](const std::string& col) {
    auto it = col_index.find(col);
    if (it != col_index.end()) return it->second;
    const int idx = static_cast<int>(col_names.size());
    col_index.emplace(col, idx);
    col_names.push_back(col);
    objective.push_back(0.0);
    lower.push_back(0.0);
    upper.push_back(in_integer_block ? 1.0 : std::numeric_limits<double>::infinity());
    integer.push_back(in_integer_block);
    return idx;
  };

  Section section = Section::kNone;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw[0] == '*') continue;
    auto tok = tokenize(raw);
    if (tok.empty()) continue;
    const bool header = raw[0] != ' ' && raw[0] != '\t';
    if (header) {
      const std::string& key = tok[0];
      if (key == "NAME") {
        section = Section::kName;
        if (tok.size() > 1) name = tok[1];
      } else if (key == "ROWS") {
        section = Section::kRows;
      } else if (key == "COLUMNS") {
        section = Section::kColumns;
      } else if (key == "RHS") {
        section = Section::kRhs;
      } else if (key == "RANGES") {
        section = Section::kRanges;
      } else if (key == "BOUNDS") {
        section = Section::kBounds;
      } else if (key == "OBJSENSE") {
        section = Section::kObjSense;
        if (tok.size() > 1) maximize = tok[1] == "MAX" || tok[1] == "MAXIMIZE";
      } else if (key == "ENDATA") {
        section = Section::kEnd;
        break;
      } else {
        throw ParseError("line " + std::to_string(line_no) + ": unknown section '" + key + "'");
      }
      continue;
    }
    switch (section) {
      case Section::kObjSense:
        maximize = tok[0] == "MAX" || tok[0] == "MAXIMIZE";
        break;
      case Section::kRows: {
        if (tok.size() < 2) throw ParseError("line " + std::to_string(line_no) + ": short ROWS line");
        RowKind kind;
        if (tok[0] == "N") {
          kind = objective_row.empty() ? RowKind::kObjective : RowKind::kFree;
          if (objective_row.empty()) objective_row = tok[1];
        } else if (tok[0] == "L") {
          kind = RowKind::kLe;
        } else if (tok[0] == "G") {
          kind = RowKind::kGe;
        } else if (tok[0] == "E") {
          kind = RowKind::kEq;
        } else {
          throw ParseError("line " + std::to_string(line_no) + ": bad row type " + tok[0]);
        }
        row_index.emplace(tok[1], static_cast<int>(row_names.size()));
        row_names.push_back(tok[1]);
        row_kinds.push_back(kind);
        row_rhs.push_back(0.0);
        break;
      }
      case Section::kColumns: {
        if (tok.size() >= 3 && unquote(tok[1]) == "MARKER") {
          if (unquote(tok[2]) == "INTORG") in_integer_block = true;
          else if (unquote(tok[2]) == "INTEND") in_integer_block = false;
          break;
        }
        if (tok.size() != 3 && tok.size() != 5)
          throw ParseError("line " + std::to_string(line_no) + ": malformed COLUMNS line");
        const int col = column(tok[0]);
        for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
          auto it = row_index.find(tok[k]);
          if (it == row_index.end())
            throw ParseError("line " + std::to_string(line_no) + ": unknown row " + tok[k]);
          const double v = parse_number(tok[k + 1], line_no);
          if (row_kinds[it->second] == RowKind::kObjective) objective[col] += v;
          else if (row_kinds[it->second] != RowKind::kFree) entries.emplace_back(it->second, col, v);
        }
        break;
      }
      case Section::kRhs: {
        // The set name is optional in free MPS.
        const std::size_t start = (tok.size() % 2 == 1) ? 1 : 0;
        for (std::size_t k = start; k + 1 < tok.size(); k += 2) {
          auto it = row_index.find(tok[k]);
          if (it == row_index.end())
            throw ParseError("line " + std::to_string(line_no) + ": unknown row " + tok[k]);
          // An objective RHS is a constant offset, which the model does not carry.
          if (row_kinds[it->second] == RowKind::kObjective) continue;
          row_rhs[it->second] = parse_number(tok[k + 1], line_no);
        }
        break;
      }
      case Section::kRanges:
        throw ParseError("line " + std::to_string(line_no) + ": RANGES are not supported");
      case Section::kBounds: {
        if (tok.size() < 3) throw ParseError("line " + std::to_string(line_no) + ": short BOUNDS line");
        const std::string& type = tok[0];
        auto it = col_index.find(tok[2]);
        if (it == col_index.end())
          throw ParseError("line " + std::to_string(line_no) + ": unknown column " + tok[2]);
        const int col = it->second;
        auto value = [&]() {
          if (tok.size() < 4) throw ParseError("line " + std::to_string(line_no) + ": bound needs a value");
          return parse_number(tok[3], line_no);
        };
        if (type == "BV") {
          lower[col] = 0.0;
          upper[col] = 1.0;
        } else if (type == "UP" || type == "UI") {
          upper[col] = value();
        } else if (type == "LO" || type == "LI") {
          lower[col] = value();
        } else if (type == "FX") {
          lower[col] = upper[col] = value();
        } else if (type == "MI") {
          lower[col] = -std::numeric_limits<double>::infinity();
        } else if (type == "PL") {
          upper[col] = std::numeric_limits<double>::infinity();
        } else if (type == "FR") {
          lower[col] = -std::numeric_limits<double>::infinity();
          upper[col] = std::numeric_limits<double>::infinity();
        } else {
          throw ParseError("line " + std::to_string(line_no) + ": unsupported bound type " + type);
        }
        break;
      }
      case Section::kName:
        break;
      default:
        throw ParseError("line " + std::to_string(line_no) + ": data outside a section");
    }
  }
  if (section != Section::kEnd) throw ParseError("missing ENDATA");

  const int n = static_cast<int>(col_names.size());
  Fixings fixings(n, -1);
  for (int i = 0; i < n; ++i) {
    const double lo = std::max(lower[i], 0.0);
    const double up = std::min(upper[i], 1.0);
    if (lower[i] < 0.0 || upper[i] > 1.0 || lo > up)
      throw ParseError("column " + col_names[i] + " is not binary");
    const bool lo_int = lo == std::round(lo);
    const bool up_int = up == std::round(up);
    if (!lo_int || !up_int) throw ParseError("column " + col_names[i] + " has fractional bounds");
    if (lo == up) fixings[i] = static_cast<std::int8_t>(lo);
  }
  if (maximize)
    for (double& c : objective) c = -c;

  // Assemble <= rows.
  std::vector<int> first_out(row_names.size(), -1);
  std::vector<int> second_out(row_names.size(), -1);
  std::vector<double> rhs;
  std::vector<std::string> con_names;
  for (std::size_t r = 0; r < row_names.size(); ++r) {
    switch (row_kinds[r]) {
      case RowKind::kLe:
        first_out[r] = static_cast<int>(rhs.size());
        rhs.push_back(row_rhs[r]);
        con_names.push_back(row_names[r]);
        break;
      case RowKind::kGe:
        second_out[r] = static_cast<int>(rhs.size());
        rhs.push_back(-row_rhs[r]);
        con_names.push_back(row_names[r]);
        break;
      case RowKind::kEq:
        first_out[r] = static_cast<int>(rhs.size());
        rhs.push_back(row_rhs[r]);
        con_names.push_back(row_names[r]);
        second_out[r] = static_cast<int>(rhs.size());
        rhs.push_back(-row_rhs[r]);
        con_names.push_back(row_names[r] + "_ge");
        break;
      default:
        break;
    }
  }
  std::vector<Triplet> triplets;
  triplets.reserve(entries.size());
  for (const auto& [r, col, v] : entries) {
    if (first_out[r] >= 0) triplets.push_back({first_out[r], col, v});
    if (second_out[r] >= 0) triplets.push_back({second_out[r], col, -v});
  }
  MpsModel model{IpInstance(name, std::move(objective), std::move(rhs), std::move(triplets),
                            std::move(col_names), std::move(con_names)),
                 std::move(fixings)};
  return model;
}

MpsModel read_mps_string(const std::string& text) {
  std::istringstream ss(text);
  return read_mps(ss);
}

MpsModel read_mps_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_mps(in);
}

void write_solution(std::ostream& out, const IpInstance& instance, const Solution& solution,
                    const std::string& status) {
  if (solution.size() != instance.n_vars()) throw DimensionError("solution length does not match n_vars");
  out << "objective " << format_double(solution.objective_value) << '\n';
  if (!status.empty()) out << "status " << status << '\n';
  for (int i = 0; i < instance.n_vars(); ++i)
    out << instance.var_name(i) << ' ' << static_cast<int>(solution.values[i]) << '\n';
}

void write_solution_file(const std::filesystem::path& path, const IpInstance& instance,
                         const Solution& solution, const std::string& status) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_solution(out, instance, solution, status);
}

ParsedSolution read_solution(std::istream& in, const IpInstance& instance) {
  std::unordered_map<std::string, int> index;
  for (int i = 0; i < instance.n_vars(); ++i) index.emplace(instance.var_name(i), i);
  ParsedSolution parsed;
  parsed.values.assign(instance.n_vars(), 0);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto tok = tokenize(raw);
    if (tok.empty() || tok[0][0] == '#') continue;
    std::string key = tok[0];
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (key == "objective" || key == "=obj=" || key == "obj" || key == "objective:") {
      if (tok.size() < 2) throw ParseError("line " + std::to_string(line_no) + ": objective without value");
      parsed.reported_objective = parse_number(tok[1], line_no);
      continue;
    }
    if (key == "status" && !index.contains(tok[0])) {
      if (tok.size() < 2) throw ParseError("line " + std::to_string(line_no) + ": status without value");
      parsed.status = tok[1];
      continue;
    }
    if (tok.size() < 2) throw ParseError("line " + std::to_string(line_no) + ": expected 'name value'");
    auto it = index.find(tok[0]);
    if (it == index.end()) throw ParseError("line " + std::to_string(line_no) + ": unknown variable " + tok[0]);
    const double v = parse_number(tok[1], line_no);
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-6 || (r != 0.0 && r != 1.0))
      throw ParseError("line " + std::to_string(line_no) + ": non-binary value for " + tok[0]);
    parsed.values[it->second] = static_cast<std::uint8_t>(r);
  }
  return parsed;
}

ParsedSolution read_solution_file(const std::filesystem::path& path, const IpInstance& instance) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_solution(in, instance);
}

}  // namespace lns
