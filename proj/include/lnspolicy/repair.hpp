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
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lnspolicy/clock.hpp"
#include "lnspolicy/ip.hpp"

namespace lns {

inline constexpr double kDefaultRepairTimeLimit = 2.0;
inline constexpr double kIntegralityTol = 1e-6;

// Sub-IP: optimize the variables with free_mask[i] = 1, all others pinned to
// their warm-start values.
struct SubIpRequest {
  const IpInstance* instance = nullptr;
  std::vector<std::uint8_t> free_mask;
  Solution warm_start;
  double time_limit = kDefaultRepairTimeLimit;  // seconds on `clock`
  std::optional<double> gap_limit;              // relative
  TimeSource clock = TimeSource::kWall;
};

enum class SubIpStatus { kOptimal, kTimeLimit, kInfeasibleSubproblem };
const char* to_string(SubIpStatus status);

struct SubIpResult {
  Solution solution;
  SubIpStatus status = SubIpStatus::kTimeLimit;
  long nodes_explored = 0;
  double bound = 0.0;  // valid lower bound on the sub-IP optimum
  long lp_iterations = 0;
  double elapsed = 0.0;  // seconds on the request's clock
};

// Depth-first branch and bound over the free variables. The incumbent starts
// at the warm start, so the result is never worse. Each node solves the LP
// relaxation with fixings, branches on the most fractional free variable
// (lowest index on ties) and visits the child matching the LP rounding first.
// The time limit is checked between node expansions.
//
// Throws ContractError when the warm start is infeasible or lengths mismatch.
SubIpResult solve_subip(const SubIpRequest& request);

class RepairBackend {
 public:
  virtual ~RepairBackend() = default;
  virtual SubIpResult solve(const SubIpRequest& request) = 0;
  virtual std::string name() const = 0;
};

class InternalRepair final : public RepairBackend {
 public:
  SubIpResult solve(const SubIpRequest& request) override { return solve_subip(request); }
  std::string name() const override { return "internal"; }
};

// Runs an external solver. The command template is expanded with {mps}
// (problem file), {sol} (solution file the solver must write) and {tl}
// (time limit in seconds), run through /bin/sh, and killed after
// time_limit + kExternalGraceSeconds. The solution file holds an optional
// "objective <v>" line, an optional "status optimal" line and one
// "<name> <value>" pair per nonzero variable.
inline constexpr double kExternalGraceSeconds = 5.0;

struct ExternalRepairOptions {
  std::string command_template;
  std::filesystem::path work_dir = std::filesystem::temp_directory_path();
};

// Throws AdapterError on a non-zero exit, timeout or unreadable solution.
SubIpResult external_repair(const SubIpRequest& request, const ExternalRepairOptions& options);

class ExternalRepair final : public RepairBackend {
 public:
  explicit ExternalRepair(ExternalRepairOptions options) : options_(std::move(options)) {}
  SubIpResult solve(const SubIpRequest& request) override { return external_repair(request, options_); }
  std::string name() const override { return "external"; }

 private:
  ExternalRepairOptions options_;
};

// Repair on the full problem (everything free) starting from the trivial
// feasible point, for `budget` seconds.
Solution initial_solution(const IpInstance& instance, double budget, RepairBackend& backend,
                          TimeSource clock = TimeSource::kWall);

}  // namespace lns
