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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lnspolicy/ip.hpp"

namespace lns {

enum class LpStatus { kOptimal, kInfeasible, kIterationLimit };
enum class BasisStatus : std::uint8_t { kLower, kBasic, kUpper };

const char* to_string(LpStatus status);

struct LpSolution {
  std::vector<double> primal;         // structural values in [lo, up]
  double objective = 0.0;
  std::vector<double> reduced_costs;  // c_j - y'A_j per structural
  std::vector<BasisStatus> basis_status;
  std::vector<double> duals;          // one per row, <= 0 at optimality
  int iterations = 0;
  LpStatus status = LpStatus::kIterationLimit;
};

// min c'x  s.t.  Ax <= b,  lo <= x <= up, with A stored by column.
struct LpProblem {
  int n = 0;
  int m = 0;
  std::vector<double> cost;
  std::vector<double> rhs;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::size_t> col_start{0};
  std::vector<int> row_index;
  std::vector<double> value;

  // Relaxation of an instance with 0 <= x <= 1; fixings (-1 / 0 / 1) pin
  // variables by setting both bounds.
  static LpProblem relaxation(const IpInstance& instance, std::span<const std::int8_t> fixings = {});
};

inline constexpr int kDefaultLpIterationLimit = 200000;

// Bounded-variable primal revised simplex. Nonbasic structurals start at
// `start` (clamped to their bounds) when given, else at their lower bound;
// rows left infeasible by that start get an artificial for phase 1. Dantzig
// pricing switches to Bland's rule after a run of non-improving pivots.
LpSolution solve_lp(const LpProblem& problem, std::span<const double> start = {},
                    int iteration_limit = kDefaultLpIterationLimit);

LpSolution solve_lp(const IpInstance& instance, std::span<const std::int8_t> fixings = {},
                    int iteration_limit = kDefaultLpIterationLimit);

}  // namespace lns
