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

#include "lnspolicy/generators.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lnspolicy/errors.hpp"
#include "lnspolicy/random.hpp"

namespace lns {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

// Deterministic pseudo-random compatibility in [0, 1) for an unordered pair,
// so the auction generator never materializes an items x items matrix.
double pair_compat(std::uint64_t seed, int a, int b) {
  if (a > b) std::swap(a, b);
  const std::uint64_t h = mix_seed(seed ^ mix_seed((static_cast<std::uint64_t>(a) << 32) | b));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Bundle growth for one bidder: the next item is drawn proportionally to
// interest times mean compatibility with the items already in the bundle.
class BundleGrower {
 public:
  BundleGrower(int n_items, std::uint64_t compat_seed, const std::vector<double>& interests)
      : n_(n_items), compat_seed_(compat_seed), interests_(interests) {}

  void start(int item) {
    in_.assign(n_, 0);
    compat_sum_.assign(n_, 0.0);
    bundle_.clear();
    add(item);
  }
  void add(int item) {
    in_[item] = 1;
    bundle_.push_back(item);
    for (int k = 0; k < n_; ++k)
      if (k != item) compat_sum_[k] += pair_compat(compat_seed_, item, k);
  }
  int choose_next(Rng& rng) {
    weights_.assign(n_, 0.0);
    for (int k = 0; k < n_; ++k)
      if (!in_[k]) weights_[k] = interests_[k] * compat_sum_[k] / bundle_.size();
    return rng.weighted(weights_);
  }
  bool full() const { return static_cast<int>(bundle_.size()) == n_; }
  std::vector<int> bundle() const {
    std::vector<int> b = bundle_;
    std::sort(b.begin(), b.end());
    return b;
  }
  std::size_t size() const { return bundle_.size(); }

 private:
  int n_;
  std::uint64_t compat_seed_;
  const std::vector<double>& interests_;
  std::vector<std::uint8_t> in_;
  std::vector<double> compat_sum_;
  std::vector<int> bundle_;
  std::vector<double> weights_;
};

}  // namespace

std::string family_name(Family family) {
  switch (family) {
    case Family::kSetCover: return "sc";
    case Family::kIndependentSet: return "mis";
    case Family::kAuction: return "ca";
    case Family::kMaxCut: return "mc";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "sc") return Family::kSetCover;
  if (name == "mis") return Family::kIndependentSet;
  if (name == "ca") return Family::kAuction;
  if (name == "mc") return Family::kMaxCut;
  throw ConfigError("unknown family '" + name + "' (expected sc, mis, ca or mc)");
}

GenSpec paper_preset(Family family, int scale, std::uint64_t seed) {
  require(scale == 1 || scale == 2 || scale == 4, "scale must be 1, 2 or 4");
  GenSpec s;
  s.family = family;
  s.seed = seed;
  switch (family) {
    case Family::kSetCover:
      s.rows = 5000;
      s.cols = 1000 * scale;
      s.density = 0.05;
      break;
    case Family::kIndependentSet:
      s.nodes = 1500 * scale;
      s.affinity = 4;
      break;
    case Family::kAuction:
      s.items = 2000 * scale;
      s.bids = 4000 * scale;
      break;
    case Family::kMaxCut:
      s.nodes = 500 * scale;
      s.attachment = 5;
      break;
  }
  return s;
}

GenSpec desk_preset(Family family, int scale, std::uint64_t seed) {
  require(scale >= 1, "scale must be positive");
  GenSpec s;
  s.family = family;
  s.seed = seed;
  switch (family) {
    case Family::kSetCover:
      s.rows = 1000;
      s.cols = 200 * scale;
      s.density = 0.05;
      break;
    case Family::kIndependentSet:
      s.nodes = 300 * scale;
      s.affinity = 4;
      break;
    case Family::kAuction:
      s.items = 200 * scale;
      s.bids = 400 * scale;
      break;
    case Family::kMaxCut:
      s.nodes = 100 * scale;
      s.attachment = 5;
      break;
  }
  return s;
}

IpInstance generate(const GenSpec& spec) {
  switch (spec.family) {
    case Family::kSetCover: return generate_sc(spec.rows, spec.cols, spec.density, spec.seed);
    case Family::kIndependentSet: return generate_mis(spec.nodes, spec.affinity, spec.seed);
    case Family::kAuction: return generate_ca(spec.items, spec.bids, spec.seed);
    case Family::kMaxCut: return generate_mc(spec.nodes, spec.attachment, spec.seed);
  }
  throw ConfigError("unknown family");
}

IpInstance generate_sc(int rows, int cols, double density, std::uint64_t seed, CostRange costs) {
  require(rows > 0 && cols > 0, "set cover: rows and cols must be positive");
  require(density > 0.0 && density <= 1.0, "set cover: density must be in (0, 1]");
  require(costs.lo <= costs.hi, "set cover: empty cost range");
  if (cols < 2) throw GenerationError("set cover: need at least two columns to cover each row twice");
  Rng rng(seed);

  std::vector<std::vector<int>> row_cols(rows);
  std::vector<int> col_count(cols, 0);
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i)
      if (rng.bernoulli(density)) {
        row_cols[j].push_back(i);
        ++col_count[i];
      }

  int repaired = 0;
  for (int j = 0; j < rows; ++j) {
    if (row_cols[j].size() >= 2) continue;
    ++repaired;
    while (row_cols[j].size() < 2) {
      const int i = rng.index(cols);
      if (std::find(row_cols[j].begin(), row_cols[j].end(), i) != row_cols[j].end()) continue;
      row_cols[j].push_back(i);
      ++col_count[i];
    }
  }
  if (repaired > rows / 2 + 1)
    throw GenerationError("set cover: density too low, " + std::to_string(repaired) + " of " +
                          std::to_string(rows) + " rows needed patching");
  for (int i = 0; i < cols; ++i) {
    if (col_count[i] > 0) continue;
    const int j = rng.index(rows);
    row_cols[j].push_back(i);
    ++col_count[i];
  }

  std::vector<double> objective(cols);
  for (int i = 0; i < cols; ++i) objective[i] = static_cast<double>(rng.uniform_int(costs.lo, costs.hi));

  std::vector<Triplet> triplets;
  for (int j = 0; j < rows; ++j)
    for (int i : row_cols[j]) triplets.push_back({j, i, -1.0});
  std::vector<double> rhs(rows, -1.0);
  return IpInstance("sc_r" + std::to_string(rows) + "_c" + std::to_string(cols) + "_s" + std::to_string(seed),
                    std::move(objective), std::move(rhs), std::move(triplets));
}

std::vector<Edge> sequential_attachment_graph(int nodes, int affinity, std::uint64_t seed) {
  require(nodes > 0 && affinity > 0, "independent set: nodes and affinity must be positive");
  require(affinity < nodes, "independent set: affinity must be below the node count");
  Rng rng(seed);
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(nodes - affinity) * affinity);
  for (int v = affinity; v < nodes; ++v) {
    std::vector<int> targets = rng.sample(v, affinity);
    std::sort(targets.begin(), targets.end());
    for (int u : targets) edges.emplace_back(u, v);
  }
  return edges;
}

std::vector<Edge> barabasi_albert_graph(int nodes, int attachment, std::uint64_t seed) {
  require(nodes > 0 && attachment > 0, "max cut: nodes and attachment must be positive");
  require(attachment < nodes, "max cut: attachment must be below the node count");
  Rng rng(seed);
  std::vector<Edge> edges;
  std::vector<int> repeated;  // each node once per incident edge end
  std::vector<int> targets(attachment);
  for (int k = 0; k < attachment; ++k) targets[k] = k;
  for (int v = attachment; v < nodes; ++v) {
    for (int u : targets) {
      edges.emplace_back(u, v);
      repeated.push_back(u);
      repeated.push_back(v);
    }
    std::set<int> chosen;
    while (static_cast<int>(chosen.size()) < attachment)
      chosen.insert(repeated[rng.index(static_cast<int>(repeated.size()))]);
    targets.assign(chosen.begin(), chosen.end());
  }
  return edges;
}

IpInstance independent_set_instance(int nodes, const std::vector<Edge>& edges, std::string name) {
  std::vector<double> objective(nodes, -1.0);
  std::vector<Triplet> triplets;
  std::vector<double> rhs;
  triplets.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    const int j = static_cast<int>(rhs.size());
    triplets.push_back({j, u, 1.0});
    triplets.push_back({j, v, 1.0});
    rhs.push_back(1.0);
  }
  return IpInstance(std::move(name), std::move(objective), std::move(rhs), std::move(triplets));
}

IpInstance generate_mis(int nodes, int affinity, std::uint64_t seed) {
  auto edges = sequential_attachment_graph(nodes, affinity, seed);
  return independent_set_instance(
      nodes, edges, "mis_n" + std::to_string(nodes) + "_a" + std::to_string(affinity) + "_s" + std::to_string(seed));
}

IpInstance max_cut_instance(int nodes, const std::vector<Edge>& edges, std::string name) {
  // Variables: x_0..x_{V-1} for the side of each node, then y_e per edge.
  const int n = nodes + static_cast<int>(edges.size());
  std::vector<double> objective(n, 0.0);
  std::vector<Triplet> triplets;
  std::vector<double> rhs;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [u, v] = edges[e];
    const int y = nodes + static_cast<int>(e);
    objective[y] = -1.0;
    int j = static_cast<int>(rhs.size());
    // y_e <= x_u + x_v
    triplets.push_back({j, y, 1.0});
    triplets.push_back({j, u, -1.0});
    triplets.push_back({j, v, -1.0});
    rhs.push_back(0.0);
    // y_e <= 2 - x_u - x_v
    ++j;
    triplets.push_back({j, y, 1.0});
    triplets.push_back({j, u, 1.0});
    triplets.push_back({j, v, 1.0});
    rhs.push_back(2.0);
  }
  return IpInstance(std::move(name), std::move(objective), std::move(rhs), std::move(triplets));
}

IpInstance generate_mc(int nodes, int attachment, std::uint64_t seed) {
  auto edges = barabasi_albert_graph(nodes, attachment, seed);
  return max_cut_instance(
      nodes, edges, "mc_n" + std::to_string(nodes) + "_m" + std::to_string(attachment) + "_s" + std::to_string(seed));
}

IpInstance auction_instance(int n_items, const std::vector<Bid>& bids, std::string name) {
  std::vector<std::vector<int>> bids_of_item(n_items);
  for (std::size_t b = 0; b < bids.size(); ++b)
    for (int item : bids[b].bundle) {
      if (item < 0 || item >= n_items) throw DimensionError("bid references item out of range");
      bids_of_item[item].push_back(static_cast<int>(b));
    }
  std::vector<double> objective(bids.size());
  for (std::size_t b = 0; b < bids.size(); ++b) objective[b] = -bids[b].price;
  std::vector<Triplet> triplets;
  std::vector<double> rhs;
  for (int item = 0; item < n_items; ++item) {
    if (bids_of_item[item].size() < 2) continue;
    const int j = static_cast<int>(rhs.size());
    for (int b : bids_of_item[item]) triplets.push_back({j, b, 1.0});
    rhs.push_back(1.0);
  }
  return IpInstance(std::move(name), std::move(objective), std::move(rhs), std::move(triplets));
}

IpInstance generate_ca(int items, int bids, std::uint64_t seed) {
  require(items > 0 && bids > items, "auction: need bids > items > 0");
  constexpr double kMinValue = 1.0;
  constexpr double kMaxValue = 100.0;
  constexpr double kValueDeviation = 0.5;
  constexpr double kAddItemProb = 0.7;
  constexpr int kMaxSubBids = 5;
  constexpr double kBudgetFactor = 1.5;
  constexpr double kResaleFactor = 0.5;

  Rng rng(seed);
  const std::uint64_t compat_seed = derive_seed(seed, 1);
  std::vector<double> values(items);
  for (double& v : values) v = rng.uniform(kMinValue, kMaxValue);

  std::vector<Bid> all_bids;
  int n_dummy = 0;
  std::vector<double> interests(items);
  std::vector<double> private_values(items);
  BundleGrower grower(items, compat_seed, interests);

  auto bundle_value = [](const std::vector<int>& bundle, const std::vector<double>& v) {
    double total = 0.0;
    for (int i : bundle) total += v[i];
    return total;
  };

  while (static_cast<int>(all_bids.size()) < bids) {
    for (int i = 0; i < items; ++i) {
      interests[i] = rng.uniform();
      private_values[i] = values[i] + kMaxValue * kValueDeviation * (2.0 * interests[i] - 1.0);
    }
    grower.start(rng.weighted(interests));
    while (rng.bernoulli(kAddItemProb) && !grower.full()) grower.add(grower.choose_next(rng));
    const std::vector<int> bundle = grower.bundle();
    const double price = bundle_value(bundle, private_values) * rng.uniform(0.9, 1.1);
    if (price < 0.0) continue;

    std::vector<Bid> bidder{{bundle, price}};
    std::set<std::vector<int>> seen{bundle};
    // Substitutes share one item with the root bundle and have its size.
    std::vector<Bid> candidates;
    for (int item : bundle) {
      grower.start(item);
      while (grower.size() < bundle.size()) grower.add(grower.choose_next(rng));
      std::vector<int> sub = grower.bundle();
      const double sub_price = bundle_value(sub, private_values) * rng.uniform(0.9, 1.1);
      candidates.push_back({std::move(sub), sub_price});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Bid& a, const Bid& b) { return a.price > b.price; });
    const double budget = kBudgetFactor * price;
    const double min_resale = kResaleFactor * bundle_value(bundle, values);
    for (Bid& c : candidates) {
      if (static_cast<int>(bidder.size()) >= kMaxSubBids + 1 ||
          static_cast<int>(all_bids.size() + bidder.size()) >= bids)
        break;
      if (c.price < 0.0 || c.price > budget) continue;
      if (bundle_value(c.bundle, values) < min_resale) continue;
      if (!seen.insert(c.bundle).second) continue;
      bidder.push_back(std::move(c));
    }
    if (bidder.size() >= 2) {
      const int dummy = items + n_dummy++;
      for (Bid& b : bidder) b.bundle.push_back(dummy);
    }
    for (Bid& b : bidder) {
      if (static_cast<int>(all_bids.size()) >= bids) break;
      all_bids.push_back(std::move(b));
    }
  }
  return auction_instance(items + n_dummy, all_bids,
                          "ca_i" + std::to_string(items) + "_b" + std::to_string(bids) + "_s" + std::to_string(seed));
}

Solution trivial_feasible_point(const IpInstance& instance) {
  Assignment zeros(instance.n_vars(), 0);
  if (is_feasible(instance, zeros)) return Solution::of(instance, std::move(zeros));
  Assignment ones(instance.n_vars(), 1);
  if (is_feasible(instance, ones)) return Solution::of(instance, std::move(ones));
  throw ContractError("instance " + instance.name() + " has no trivial feasible point");
}

}  // namespace lns
