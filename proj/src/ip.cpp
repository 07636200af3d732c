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

#include "lnspolicy/ip.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "lnspolicy/errors.hpp"

namespace lns {

IpInstance::IpInstance(std::string name, std::vector<double> objective,
                       std::vector<double> rhs, std::vector<Triplet> triplets,
                       std::vector<std::string> var_names,
                       std::vector<std::string> con_names)
    : name_(std::move(name)),
      objective_(std::move(objective)),
      rhs_(std::move(rhs)),
      var_names_(std::move(var_names)),
      con_names_(std::move(con_names)) {
  const int n = n_vars();
  const int m = n_cons();
  if (!var_names_.empty() && static_cast<int>(var_names_.size()) != n)
    throw DimensionError("var_names length does not match objective length");
  if (!con_names_.empty() && static_cast<int>(con_names_.size()) != m)
    throw DimensionError("con_names length does not match rhs length");
  for (double c : objective_) {
    if (!std::isfinite(c)) throw ContractError("non-finite objective coefficient");
    if (c != std::round(c)) integral_objective_ = false;
  }
  for (double b : rhs_)
    if (!std::isfinite(b)) throw ContractError("non-finite right-hand side");

  for (const Triplet& t : triplets) {
    if (t.row < 0 || t.row >= m) throw DimensionError("row index out of range");
    if (t.col < 0 || t.col >= n) throw DimensionError("column index out of range");
    if (!std::isfinite(t.value)) throw ContractError("non-finite matrix coefficient");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  row_start_.assign(m + 1, 0);
  row_entries_.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size();) {
    Triplet t = triplets[k++];
    while (k < triplets.size() && triplets[k].row == t.row && triplets[k].col == t.col)
      t.value += triplets[k++].value;
    if (t.value == 0.0) continue;
    row_entries_.push_back({t.col, t.value});
    ++row_start_[t.row + 1];
  }
  for (int j = 0; j < m; ++j) row_start_[j + 1] += row_start_[j];

  col_start_.assign(n + 1, 0);
  for (const Entry& e : row_entries_) ++col_start_[e.index + 1];
  for (int i = 0; i < n; ++i) col_start_[i + 1] += col_start_[i];
  col_entries_.resize(row_entries_.size());
  std::vector<std::size_t> fill(col_start_.begin(), col_start_.end() - 1);
  for (int j = 0; j < m; ++j)
    for (const Entry& e : row(j)) col_entries_[fill[e.index]++] = {j, e.value};
}

std::string IpInstance::var_name(int i) const {
  return var_names_.empty() ? "x" + std::to_string(i + 1) : var_names_[i];
}

std::string IpInstance::con_name(int j) const {
  return con_names_.empty() ? "c" + std::to_string(j + 1) : con_names_[j];
}

std::vector<Triplet> IpInstance::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (int j = 0; j < n_cons(); ++j)
    for (const Entry& e : row(j)) out.push_back({j, e.index, e.value});
  return out;
}

double evaluate(const IpInstance& instance, std::span<const std::uint8_t> values) {
  if (static_cast<int>(values.size()) != instance.n_vars())
    throw DimensionError("assignment length " + std::to_string(values.size()) +
                         " != n_vars " + std::to_string(instance.n_vars()));
  const auto c = instance.objective();
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i]) total += c[i];
  return total;
}

double max_violation(const IpInstance& instance, std::span<const std::uint8_t> values) {
  if (static_cast<int>(values.size()) != instance.n_vars())
    throw DimensionError("assignment length does not match n_vars");
  double worst = -std::numeric_limits<double>::infinity();
  const auto b = instance.rhs();
  for (int j = 0; j < instance.n_cons(); ++j) {
    double lhs = 0.0;
    for (const Entry& e : instance.row(j))
      if (values[e.index]) lhs += e.value;
    worst = std::max(worst, lhs - b[j]);
  }
  return worst;
}

bool is_feasible(const IpInstance& instance, std::span<const std::uint8_t> values,
                 double tol) {
  if (tol < 0) throw ContractError("feasibility tolerance must be >= 0");
  return max_violation(instance, values) <= tol;
}

Solution Solution::of(const IpInstance& instance, Assignment values) {
  Solution s;
  s.objective_value = evaluate(instance, values);
  s.values = std::move(values);
  return s;
}

IncumbentTracker::IncumbentTracker(Solution initial)
    : best_(std::move(initial)),
      history_sum_(best_.values.begin(), best_.values.end()),
      history_count_(1) {}

bool IncumbentTracker::record(const IpInstance& instance, const Solution& candidate) {
  if (!is_feasible(instance, candidate.values))
    throw ContractError("record_incumbent: candidate is infeasible");
  if (history_count_ == 0) {
    *this = IncumbentTracker(candidate);
    return true;
  }
  if (!(candidate.objective_value < best_.objective_value - kObjectiveTol)) return false;
  best_ = candidate;
  for (std::size_t i = 0; i < history_sum_.size(); ++i) history_sum_[i] += candidate.values[i];
  ++history_count_;
  return true;
}

bool record_incumbent(const IpInstance& instance, IncumbentTracker& tracker,
                      const Solution& candidate) {
  return tracker.record(instance, candidate);
}

}  // namespace lns
