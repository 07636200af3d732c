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

#include "lnspolicy/repair.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lnspolicy/errors.hpp"
#include "lnspolicy/generators.hpp"
#include "lnspolicy/lp.hpp"

namespace lns {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kNodeLpIterationLimit = 50000;

// The sub-IP over free variables only: fixed columns are folded into the
// right-hand side, rows without free entries are dropped (the warm start
// satisfies them) and so are rows no assignment of the free part can violate.
struct ReducedProblem {
  std::vector<int> free_vars;
  LpProblem lp;
  std::vector<std::size_t> row_start{0};
  std::vector<int> row_col;
  std::vector<double> row_val;
  double fixed_objective = 0.0;

  bool feasible(const std::vector<std::uint8_t>& x) const {
    for (int r = 0; r < lp.m; ++r) {
      double lhs = 0.0;
      for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k)
        if (x[row_col[k]]) lhs += row_val[k];
      if (lhs > lp.rhs[r] + kFeasibilityTol) return false;
    }
    return true;
  }

  double objective(const std::vector<std::uint8_t>& x) const {
    double total = fixed_objective;
    for (int i = 0; i < lp.n; ++i)
      if (x[i]) total += lp.cost[i];
    return total;
  }
};

ReducedProblem reduce(const IpInstance& instance, const std::vector<std::uint8_t>& free_mask,
                      const Assignment& warm) {
  ReducedProblem red;
  const int n = instance.n_vars();
  std::vector<int> local(n, -1);
  for (int i = 0; i < n; ++i)
    if (free_mask[i]) {
      local[i] = static_cast<int>(red.free_vars.size());
      red.free_vars.push_back(i);
    }
  const auto c = instance.objective();
  for (int i = 0; i < n; ++i)
    if (!free_mask[i] && warm[i]) red.fixed_objective += c[i];

  const int nf = static_cast<int>(red.free_vars.size());
  std::vector<std::vector<std::pair<int, double>>> cols(nf);
  const auto b = instance.rhs();
  for (int j = 0; j < instance.n_cons(); ++j) {
    double rhs = b[j];
    double max_activity = 0.0;
    std::size_t free_entries = 0;
    for (const Entry& e : instance.row(j)) {
      if (local[e.index] >= 0) {
        ++free_entries;
        max_activity += std::max(e.value, 0.0);
      } else if (warm[e.index]) {
        rhs -= e.value;
      }
    }
    if (free_entries == 0 || max_activity <= rhs + kFeasibilityTol) continue;
    const int r = red.lp.m++;
    red.lp.rhs.push_back(rhs);
    for (const Entry& e : instance.row(j)) {
      if (local[e.index] < 0) continue;
      cols[local[e.index]].emplace_back(r, e.value);
      red.row_col.push_back(local[e.index]);
      red.row_val.push_back(e.value);
    }
    red.row_start.push_back(red.row_col.size());
  }
  red.lp.n = nf;
  red.lp.lower.assign(nf, 0.0);
  red.lp.upper.assign(nf, 1.0);
  red.lp.cost.resize(nf);
  for (int k = 0; k < nf; ++k) {
    red.lp.cost[k] = c[red.free_vars[k]];
    for (const auto& [r, v] : cols[k]) {
      red.lp.row_index.push_back(r);
      red.lp.value.push_back(v);
    }
    red.lp.col_start.push_back(red.lp.row_index.size());
  }
  return red;
}

struct Node {
  std::vector<std::int8_t> fix;  // -1 free, else pinned value
  double parent_bound = -kInf;
};

}  // namespace

TimeSource parse_time_source(const std::string& name) {
  if (name == "wall") return TimeSource::kWall;
  if (name == "work") return TimeSource::kWork;
  throw ConfigError("unknown time source '" + name + "' (expected wall or work)");
}

const char* to_string(TimeSource source) { return source == TimeSource::kWork ? "work" : "wall"; }

const char* to_string(SubIpStatus status) {
  switch (status) {
    case SubIpStatus::kOptimal: return "optimal";
    case SubIpStatus::kTimeLimit: return "time_limit";
    case SubIpStatus::kInfeasibleSubproblem: return "infeasible_subproblem";
  }
  return "?";
}

SubIpResult solve_subip(const SubIpRequest& request) {
  if (request.instance == nullptr) throw ContractError("solve_subip: request has no instance");
  const IpInstance& instance = *request.instance;
  const int n = instance.n_vars();
  if (static_cast<int>(request.free_mask.size()) != n || request.warm_start.size() != n)
    throw DimensionError("solve_subip: free mask / warm start length does not match n_vars");
  if (!is_feasible(instance, request.warm_start.values))
    throw ContractError("solve_subip: warm start is infeasible");

  Stopwatch clock(request.clock);
  SubIpResult result;
  result.solution = request.warm_start;
  result.bound = -kInf;
  if (request.time_limit <= 0.0) {
    result.status = SubIpStatus::kTimeLimit;
    return result;
  }

  const ReducedProblem red = reduce(instance, request.free_mask, request.warm_start.values);
  clock.charge(kWorkPerReducedEntry *
               static_cast<double>(instance.n_vars() + instance.n_cons() + static_cast<long>(instance.nnz())));
  const int nf = red.lp.n;
  const bool integral = instance.integral_objective();

  std::vector<std::uint8_t> inc(nf);
  for (int k = 0; k < nf; ++k) inc[k] = request.warm_start.values[red.free_vars[k]];
  double inc_obj = red.objective(inc);

  auto prunable = [&](double bound) {
    if (bound >= inc_obj - kObjectiveTol) return true;
    return integral && std::ceil(bound - kIntegralityTol) >= inc_obj - kObjectiveTol;
  };
  auto offer = [&](const std::vector<std::uint8_t>& x) {
    if (!red.feasible(x)) return;
    const double obj = red.objective(x);
    if (obj < inc_obj - kObjectiveTol) {
      inc = x;
      inc_obj = obj;
    }
  };

  LpProblem lp = red.lp;
  std::vector<Node> stack;
  stack.push_back(Node{std::vector<std::int8_t>(nf, -1), -kInf});
  bool stopped = false;
  double truncated_bound = kInf;
  bool root = true;
  std::vector<double> start(nf);
  std::vector<std::uint8_t> rounded(nf);

  while (!stack.empty()) {
    if (clock.elapsed() >= request.time_limit) {
      stopped = true;
      break;
    }
    if (request.gap_limit) {
      double lb = inc_obj;
      for (const Node& nd : stack) lb = std::min(lb, nd.parent_bound);
      lb = std::min(lb, truncated_bound);
      if (std::abs(inc_obj - lb) <= *request.gap_limit * std::max(std::abs(inc_obj), 1e-9)) {
        stopped = true;
        break;
      }
    }
    Node node = std::move(stack.back());
    stack.pop_back();
    if (prunable(node.parent_bound)) continue;

    for (int k = 0; k < nf; ++k) {
      lp.lower[k] = node.fix[k] < 0 ? 0.0 : node.fix[k];
      lp.upper[k] = node.fix[k] < 0 ? 1.0 : node.fix[k];
      start[k] = std::clamp(static_cast<double>(inc[k]), lp.lower[k], lp.upper[k]);
    }
    const LpSolution sol = solve_lp(lp, start, kNodeLpIterationLimit);
    ++result.nodes_explored;
    result.lp_iterations += sol.iterations;
    clock.charge_pivots(sol.iterations, lp.value.size());
    clock.charge(kWorkPerNode);

    if (sol.status == LpStatus::kInfeasible) {
      if (root) {
        result.status = SubIpStatus::kInfeasibleSubproblem;
        result.elapsed = clock.elapsed();
        return result;
      }
      continue;
    }
    root = false;
    if (sol.status == LpStatus::kIterationLimit) {
      truncated_bound = std::min(truncated_bound, node.parent_bound);
      continue;
    }
    const double bound = red.fixed_objective + sol.objective;
    if (prunable(bound)) continue;

    int branch = -1;
    double best_frac = std::numeric_limits<double>::infinity();
    for (int k = 0; k < nf; ++k) {
      rounded[k] = sol.primal[k] >= 0.5 ? 1 : 0;
      const double frac = std::abs(sol.primal[k] - std::round(sol.primal[k]));
      if (frac > kIntegralityTol) {
        const double dist = std::abs(sol.primal[k] - 0.5);
        if (dist < best_frac) {
          best_frac = dist;
          branch = k;
        }
      }
    }
    offer(rounded);
    if (branch < 0 || prunable(bound)) continue;

    const std::int8_t preferred = rounded[branch];
    Node other{node.fix, bound};
    other.fix[branch] = static_cast<std::int8_t>(1 - preferred);
    node.fix[branch] = preferred;
    node.parent_bound = bound;
    stack.push_back(std::move(other));
    stack.push_back(std::move(node));
  }

  const bool exhausted = !stopped && truncated_bound == kInf;
  result.status = exhausted ? SubIpStatus::kOptimal : SubIpStatus::kTimeLimit;

  Assignment values = request.warm_start.values;
  for (int k = 0; k < nf; ++k) values[red.free_vars[k]] = inc[k];
  Solution candidate = Solution::of(instance, std::move(values));
  if (candidate.objective_value < request.warm_start.objective_value && is_feasible(instance, candidate.values))
    result.solution = std::move(candidate);

  if (exhausted) {
    result.bound = result.solution.objective_value;
  } else {
    double lb = result.solution.objective_value;
    for (const Node& nd : stack) lb = std::min(lb, nd.parent_bound);
    result.bound = std::min(lb, truncated_bound);
  }
  result.elapsed = clock.elapsed();
  return result;
}

Solution initial_solution(const IpInstance& instance, double budget, RepairBackend& backend, TimeSource clock) {
  if (!(budget > 0.0)) throw ContractError("initial_solution: budget must be positive");
  SubIpRequest request;
  request.instance = &instance;
  request.free_mask.assign(instance.n_vars(), 1);
  request.warm_start = trivial_feasible_point(instance);
  request.time_limit = budget;
  request.clock = clock;
  SubIpResult result = backend.solve(request);
  if (result.solution.objective_value <= request.warm_start.objective_value) return result.solution;
  return request.warm_start;
}

}  // namespace lns
