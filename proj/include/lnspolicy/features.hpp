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

#include "lnspolicy/ip.hpp"
#include "lnspolicy/lp.hpp"
#include "lnspolicy/tensor.hpp"

namespace lns {

inline constexpr int kFullStaticWidth = 10;
inline constexpr int kCondensedStaticWidth = 1;

enum class FeatureMode { kFull, kCondensed };
FeatureMode parse_feature_mode(const std::string& name);  // "full" | "condensed"
const char* to_string(FeatureMode mode);
int static_width(FeatureMode mode);

// Per-variable root features, columns in order:
//   0 reduced cost / ||c||      1 c_i / ||c||          2 LP age (always 0)
//   3 x_i at lower bound        4 x_i at upper bound   5 2 * |x_i - round(x_i)|
//   6..8 one-hot basis status (lower, basic, upper)    9 root LP value x_i
// Throws ContractError unless root_lp is optimal.
Matrix root_static_features(const IpInstance& instance, const LpSolution& root_lp);

// Single column c_i / max(||c||, 1e-12).
Matrix condensed_static_features(const IpInstance& instance);

// Solves the root LP when needed.
Matrix static_features(const IpInstance& instance, FeatureMode mode);

}  // namespace lns
