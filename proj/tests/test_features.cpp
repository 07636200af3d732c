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

#include <doctest.h>

#include <cmath>

#include "lnspolicy/errors.hpp"
#include "lnspolicy/features.hpp"
#include "lnspolicy/generators.hpp"
#include "oracles.hpp"

using namespace lns;

TEST_CASE("a basic variable at one half") {
  // min -x - y  s.t.  x <= 0.5, y <= 2: x is basic at 0.5, y sits at its upper bound.
  IpInstance inst("t", {-1.0, -1.0}, {0.5, 2.0}, {{0, 0, 1.0}, {1, 1, 1.0}});
  const LpSolution lp = solve_lp(inst);
  REQUIRE(lp.status == LpStatus::kOptimal);
  const Matrix f = root_static_features(inst, lp);
  REQUIRE(f.rows() == 2);
  REQUIRE(f.cols() == 10);
  CHECK(f(0, 5) == doctest::Approx(1.0));
  CHECK(f(0, 6) == 0.0);
  CHECK(f(0, 7) == 1.0);
  CHECK(f(0, 8) == 0.0);
  CHECK(f(0, 9) == doctest::Approx(0.5));
  CHECK(f(0, 3) == 0.0);
  CHECK(f(0, 4) == 0.0);
  CHECK(f(1, 4) == 1.0);
  CHECK(f(1, 5) == 0.0);
  const double norm = std::sqrt(2.0);
  CHECK(f(0, 1) == doctest::Approx(-1.0 / norm));
  CHECK(f(1, 0) == doctest::Approx(lp.reduced_costs[1] / norm));
  CHECK(f(0, 2) == 0.0);
  CHECK(f(1, 2) == 0.0);
}

TEST_CASE("a variable at its lower bound") {
  IpInstance inst("t", {1.0, -1.0}, {1.0}, {{0, 0, 1.0}, {0, 1, 1.0}});
  const Matrix f = static_features(inst, FeatureMode::kFull);
  CHECK(f(0, 9) == 0.0);
  CHECK(f(0, 3) == 1.0);
  CHECK(f(0, 5) == 0.0);
  CHECK(f(0, 6) == 1.0);
  CHECK(f(0, 0) >= 0.0);  // optimal at the lower bound
}

TEST_CASE("full features on desk instances") {
  for (Family fam : {Family::kSetCover, Family::kIndependentSet, Family::kAuction, Family::kMaxCut}) {
    IpInstance inst = generate(desk_preset(fam, 1, 2));
    const Matrix f = static_features(inst, FeatureMode::kFull);
    CHECK(f.rows() == inst.n_vars());
    CHECK(f.cols() == 10);
    for (int i = 0; i < inst.n_vars(); ++i) {
      CHECK(f.row(i).segment(6, 3).sum() == 1.0);
      CHECK(f(i, 5) >= 0.0);
      CHECK(f(i, 5) <= 1.0 + 1e-12);
      if (f(i, 7) == 1.0) CHECK(std::abs(f(i, 0)) <= 1e-6);
    }
  }
}

TEST_CASE("condensed features are the normalized objective") {
  IpInstance inst("t", {3.0, 4.0}, {1.0}, {{0, 0, 1.0}, {0, 1, 1.0}});
  const Matrix f = condensed_static_features(inst);
  REQUIRE(f.cols() == 1);
  CHECK(f(0, 0) == doctest::Approx(0.6));
  CHECK(f(1, 0) == doctest::Approx(0.8));
  IpInstance zero("z", {0.0, 0.0}, {1.0}, {{0, 0, 1.0}});
  const Matrix z = static_features(zero, FeatureMode::kCondensed);
  CHECK(z(0, 0) == 0.0);
  CHECK(z(1, 0) == 0.0);
}

TEST_CASE("feature mode names") {
  CHECK(parse_feature_mode("full") == FeatureMode::kFull);
  CHECK(parse_feature_mode("condensed") == FeatureMode::kCondensed);
  CHECK(std::string(to_string(FeatureMode::kCondensed)) == "condensed");
  CHECK(static_width(FeatureMode::kFull) == 10);
  CHECK(static_width(FeatureMode::kCondensed) == 1);
  CHECK_THROWS_AS(parse_feature_mode("tiny"), ConfigError);
}

TEST_CASE("root features need an optimal LP") {
  IpInstance inst("t", {1.0}, {-2.0}, {{0, 0, -1.0}});  // x >= 2 is infeasible in [0,1]
  const LpSolution lp = solve_lp(inst);
  CHECK(lp.status == LpStatus::kInfeasible);
  CHECK_THROWS_AS(root_static_features(inst, lp), ContractError);
}
