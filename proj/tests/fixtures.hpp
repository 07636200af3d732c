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
#include <memory>
#include <vector>

#include "lnspolicy/policy.hpp"
#include "lnspolicy/random.hpp"

namespace fixture {

// Random bipartite state with roughly 40% edge density.
inline lns::BipartiteState random_state(int n, int m, int width, std::uint64_t seed) {
  lns::Rng rng(seed);
  std::vector<Eigen::Triplet<double>> trips;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i)
      if (rng.bernoulli(0.4)) trips.emplace_back(j, i, rng.uniform(-2.0, 2.0));
  auto a = std::make_shared<lns::SparseMatrix>(m, n);
  a->setFromTriplets(trips.begin(), trips.end());
  lns::BipartiteState s;
  s.edges = a;
  s.var_features.resize(n, width);
  s.con_features.resize(m, 1);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < width; ++k) s.var_features(i, k) = rng.uniform(-1.0, 1.0);
  for (int j = 0; j < m; ++j) s.con_features(j, 0) = rng.uniform(-1.0, 1.0);
  return s;
}

inline lns::ActionMask random_mask(int n, lns::Rng& rng) {
  lns::ActionMask mask;
  do {
    mask.assign(n, 0);
    for (auto& b : mask) b = rng.bernoulli(0.5);
  } while (!lns::valid_mask(mask));
  return mask;
}

}  // namespace fixture
