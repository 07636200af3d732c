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

#include <set>

#include "lnspolicy/errors.hpp"
#include "lnspolicy/generators.hpp"
#include "oracles.hpp"

using namespace lns;

TEST_CASE("family names round trip") {
  for (Family f : {Family::kSetCover, Family::kIndependentSet, Family::kAuction, Family::kMaxCut})
    CHECK(parse_family(family_name(f)) == f);
  CHECK_THROWS_AS(parse_family("tsp"), ConfigError);
}

TEST_CASE("generation is deterministic in the seed") {
  for (Family f : {Family::kSetCover, Family::kIndependentSet, Family::kAuction, Family::kMaxCut}) {
    IpInstance a = generate(desk_preset(f, 1, 7));
    IpInstance b = generate(desk_preset(f, 1, 7));
    IpInstance c = generate(desk_preset(f, 1, 8));
    CHECK(a.triplets().size() == b.triplets().size());
    bool same = a.nnz() == b.nnz();
    for (int i = 0; same && i < a.n_vars(); ++i) same = a.objective()[i] == b.objective()[i];
    CHECK(same);
    CHECK(oracle::dense(a).a == oracle::dense(b).a);
    const bool differ = a.n_cons() != c.n_cons() || a.n_vars() != c.n_vars() ||
                        oracle::dense(a).a != oracle::dense(c).a || oracle::dense(a).c != oracle::dense(c).c;
    CHECK(differ);
  }
}

TEST_CASE("set cover rows cover at least two columns and every column is used") {
  IpInstance inst = generate_sc(200, 40, 0.05, 3);
  for (int j = 0; j < inst.n_cons(); ++j) {
    CHECK(inst.row(j).size() >= 2);
    CHECK(inst.rhs()[j] == -1.0);
    for (const Entry& e : inst.row(j)) CHECK(e.value == -1.0);
  }
  for (int i = 0; i < inst.n_vars(); ++i) {
    CHECK(inst.col(i).size() >= 1);
    CHECK(inst.objective()[i] >= 1.0);
    CHECK(inst.objective()[i] <= 100.0);
  }
  CHECK_THROWS_AS(generate_sc(10, 5, 1.5, 1), ConfigError);
}

TEST_CASE("independent set rows are edges of a simple graph") {
  const auto edges = sequential_attachment_graph(50, 4, 2);
  CHECK(edges.size() == static_cast<std::size_t>((50 - 4) * 4));
  std::set<std::pair<int, int>> seen;
  for (auto [u, v] : edges) {
    CHECK(u != v);
    CHECK(seen.insert({std::min(u, v), std::max(u, v)}).second);
  }
  IpInstance inst = independent_set_instance(50, edges);
  CHECK(inst.n_cons() == static_cast<int>(edges.size()));
  for (int i = 0; i < inst.n_vars(); ++i) CHECK(inst.objective()[i] == -1.0);
}

TEST_CASE("max cut linearization matches the cut value") {
  std::vector<Edge> edges{{0, 1}, {1, 2}, {0, 2}};
  IpInstance inst = max_cut_instance(3, edges);
  REQUIRE(inst.n_vars() == 6);
  REQUIRE(inst.n_cons() == 6);
  const auto d = oracle::dense(inst);
  // Best cut of a triangle is 2.
  CHECK(oracle::brute_force(d).objective == -2.0);
}

TEST_CASE("Barabasi-Albert graph edge count") {
  const auto edges = barabasi_albert_graph(100, 5, 3);
  CHECK(edges.size() == static_cast<std::size_t>(5 * (100 - 5)));
}

TEST_CASE("auction instance: one row per shared item, winners pay prices") {
  std::vector<Bid> bids{{{0, 1}, 5.0}, {{1, 2}, 4.0}, {{3}, 2.0}};
  IpInstance inst = auction_instance(4, bids);
  CHECK(inst.n_vars() == 3);
  CHECK(inst.n_cons() == 1);  // only item 1 is shared
  const auto d = oracle::dense(inst);
  CHECK(oracle::brute_force(d).objective == -7.0);
}

TEST_CASE("trivial feasible point per family") {
  CHECK(trivial_feasible_point(generate_sc(30, 10, 0.2, 1)).values == Assignment(10, 1));
  const Solution mis = trivial_feasible_point(generate_mis(20, 3, 1));
  CHECK(mis.objective_value == 0.0);
  IpInstance none("t", {1.0}, {-1.0, 0.0}, {{0, 0, -1.0}, {1, 0, 1.0}});
  CHECK_THROWS_AS(trivial_feasible_point(none), ContractError);
}

TEST_CASE("desk presets") {
  CHECK(generate(desk_preset(Family::kSetCover, 1, 0)).n_vars() == 200);
  CHECK(generate(desk_preset(Family::kSetCover, 1, 0)).n_cons() == 1000);
  CHECK(generate(desk_preset(Family::kIndependentSet, 1, 0)).n_vars() == 300);
  CHECK(generate(desk_preset(Family::kAuction, 1, 0)).n_vars() == 400);
  CHECK(generate(desk_preset(Family::kMaxCut, 1, 0)).n_cons() == 2 * 5 * 95);
  CHECK(generate(desk_preset(Family::kSetCover, 2, 0)).n_vars() == 400);
}
