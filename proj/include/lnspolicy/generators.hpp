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
#include <string>
#include <utility>
#include <vector>

#include "lnspolicy/ip.hpp"

namespace lns {

enum class Family { kSetCover, kIndependentSet, kAuction, kMaxCut };

std::string family_name(Family family);          // "sc", "mis", "ca", "mc"
Family parse_family(const std::string& name);    // throws ConfigError

// Parameters of one generated instance. Only the fields of `family` are read:
//   SC  rows, cols, density      MIS nodes, affinity
//   CA  items, bids              MC  nodes, attachment
struct GenSpec {
  Family family = Family::kSetCover;
  int rows = 0;
  int cols = 0;
  double density = 0.05;
  int nodes = 0;
  int affinity = 0;
  int attachment = 0;
  int items = 0;
  int bids = 0;
  std::uint64_t seed = 0;
};

// Training sizes of the benchmark families multiplied by `scale` (1, 2 or 4).
// SC keeps its row count and scales columns.
GenSpec paper_preset(Family family, int scale, std::uint64_t seed);
// Reduced sizes for runs with the internal B&B repair:
// SC 1000x200, MIS 300 nodes, CA 200 items / 400 bids, MC 100 nodes.
GenSpec desk_preset(Family family, int scale, std::uint64_t seed);

IpInstance generate(const GenSpec& spec);

struct CostRange {
  int lo = 1;
  int hi = 100;
};

// Set covering: each entry present with probability `density`, then patched
// so every row has >= 2 columns and every column covers >= 1 row.
IpInstance generate_sc(int rows, int cols, double density, std::uint64_t seed,
                       CostRange costs = {});

// Independent set on a sequential-attachment graph: node v >= affinity joins
// `affinity` distinct earlier nodes chosen uniformly.
IpInstance generate_mis(int nodes, int affinity, std::uint64_t seed);

// Winner determination for a combinatorial auction with XOR bid sets.
IpInstance generate_ca(int items, int bids, std::uint64_t seed);

// Max cut on a Barabasi-Albert graph with `attachment` edges per new node.
IpInstance generate_mc(int nodes, int attachment, std::uint64_t seed);

// Builders from explicit structures; the random generators reduce to these.
using Edge = std::pair<int, int>;
IpInstance independent_set_instance(int nodes, const std::vector<Edge>& edges, std::string name = "mis");
IpInstance max_cut_instance(int nodes, const std::vector<Edge>& edges, std::string name = "mc");

struct Bid {
  std::vector<int> bundle;  // item ids, dummy XOR items included
  double price = 0.0;
};
// One constraint per item that appears in at least two bids.
IpInstance auction_instance(int n_items, const std::vector<Bid>& bids, std::string name = "ca");

std::vector<Edge> sequential_attachment_graph(int nodes, int affinity, std::uint64_t seed);
std::vector<Edge> barabasi_albert_graph(int nodes, int attachment, std::uint64_t seed);

// All-zeros if feasible, else all-ones if feasible. Throws ContractError when
// neither is (generated families always admit one of the two).
Solution trivial_feasible_point(const IpInstance& instance);

}  // namespace lns
