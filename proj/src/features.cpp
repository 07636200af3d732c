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

#include "lnspolicy/features.hpp"

#include <cmath>

#include "lnspolicy/errors.hpp"

namespace lns {
namespace {

double objective_norm(const IpInstance& instance) {
  double sq = 0.0;
  for (double c : instance.objective()) sq += c * c;
  return std::max(std::sqrt(sq), 1e-12);
}

}  // namespace

FeatureMode parse_feature_mode(const std::string& name) {
  if (name == "full") return FeatureMode::kFull;
  if (name == "condensed") return FeatureMode::kCondensed;
  throw ConfigError("unknown feature mode '" + name + "' (expected full or condensed)");
}

const char* to_string(FeatureMode mode) { return mode == FeatureMode::kFull ? "full" : "condensed"; }

int static_width(FeatureMode mode) { return mode == FeatureMode::kFull ? kFullStaticWidth : kCondensedStaticWidth; }

Matrix root_static_features(const IpInstance& instance, const LpSolution& root_lp) {
  if (root_lp.status != LpStatus::kOptimal) throw ContractError("root features need an optimal root LP");
  const int n = instance.n_vars();
  if (static_cast<int>(root_lp.primal.size()) != n) throw DimensionError("root LP does not match instance");
  const double norm = objective_norm(instance);
  const auto c = instance.objective();
  Matrix f = Matrix::Zero(n, kFullStaticWidth);
  for (int i = 0; i < n; ++i) {
    const double x = root_lp.primal[i];
    f(i, 0) = root_lp.reduced_costs[i] / norm;
    f(i, 1) = c[i] / norm;
    f(i, 2) = 0.0;
    f(i, 3) = std::abs(x) <= 1e-9 ? 1.0 : 0.0;
    f(i, 4) = std::abs(x - 1.0) <= 1e-9 ? 1.0 : 0.0;
    f(i, 5) = 2.0 * std::abs(x - std::round(x));
    f(i, 6 + static_cast<int>(root_lp.basis_status[i])) = 1.0;
    f(i, 9) = x;
  }
  return f;
}

Matrix condensed_static_features(const IpInstance& instance) {
  const double norm = objective_norm(instance);
  const auto c = instance.objective();
  Matrix f(instance.n_vars(), kCondensedStaticWidth);
  for (int i = 0; i < instance.n_vars(); ++i) f(i, 0) = c[i] / norm;
  return f;
}

Matrix static_features(const IpInstance& instance, FeatureMode mode) {
  if (mode == FeatureMode::kCondensed) return condensed_static_features(instance);
  // Starting at a feasible integer point skips most of phase 1.
  std::vector<double> start(instance.n_vars(), 0.0);
  if (!is_feasible(instance, Assignment(instance.n_vars(), 0)) && is_feasible(instance, Assignment(instance.n_vars(), 1)))
    start.assign(instance.n_vars(), 1.0);
  return root_static_features(instance, solve_lp(LpProblem::relaxation(instance), start));
}

}  // namespace lns
