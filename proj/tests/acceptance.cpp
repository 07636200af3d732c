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

// Acceptance checks. Prints one PASS/FAIL line per criterion; pass criterion
// numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "lnspolicy/bench.hpp"
#include "lnspolicy/errors.hpp"
#include "lnspolicy/generators.hpp"
#include "lnspolicy/lp.hpp"
#include "lnspolicy/repair.hpp"
#include "lnspolicy/trainer.hpp"
#include "oracles.hpp"

using namespace lns;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// Records a failed condition without stopping the criterion.
class Verdict {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && pass_) first_ = what;
    pass_ = pass_ && ok;
  }
  void note(const std::string& text) { notes_ += (notes_.empty() ? "" : "; ") + text; }
  Outcome done() const { return {pass_, pass_ ? notes_ : first_ + (notes_.empty() ? "" : " (" + notes_ + ")")}; }

 private:
  bool pass_ = true;
  std::string first_;
  std::string notes_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lnspolicy_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::shared_ptr<const IpInstance> desk(Family family, std::uint64_t seed, int scale = 1) {
  return std::make_shared<const IpInstance>(generate(desk_preset(family, scale, seed)));
}

const std::vector<Family> kFamilies{Family::kSetCover, Family::kIndependentSet, Family::kAuction, Family::kMaxCut};

// ---------------------------------------------------------------------------

Outcome factorization() {
  Verdict v;
  Rng rng(101);
  const int n = 10;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> raw(n);
    for (double& x : raw) x = rng.uniform();
    const std::vector<double> p = clip_probs(raw, kDefaultClip);
    double total = 0.0;
    for (int code = 0; code < (1 << n); ++code) {
      ActionMask mask(n);
      for (int i = 0; i < n; ++i) mask[i] = static_cast<std::uint8_t>((code >> i) & 1);
      total += std::exp(log_prob(p, mask));
    }
    worst = std::max(worst, std::abs(total - 1.0));
  }
  v.require(worst <= 1e-12, "subset probabilities do not sum to 1");
  v.note("max |sum - 1| = " + fmt(worst));
  return v.done();
}

Outcome repair_oracle() {
  Verdict v;
  InternalRepair backend;
  Rng rng(202);
  int pairs = 0, equal = 0;
  for (int k = 0; k < 50; ++k) {
    const Family family = kFamilies[k % kFamilies.size()];
    const auto inst = desk(family, derive_seed(202, k));
    const Solution start = k % 2 == 0 ? trivial_feasible_point(*inst)
                                      : initial_solution(*inst, 0.2, backend, TimeSource::kWork);
    const int n = inst->n_vars();
    const int free_count = static_cast<int>(rng.uniform_int(1, 14));
    const std::vector<int> order = rng.permutation(n);
    std::vector<std::uint8_t> mask(n, 0);
    for (int q = 0; q < free_count; ++q) mask[order[q]] = 1;

    SubIpRequest req;
    req.instance = inst.get();
    req.free_mask = mask;
    req.warm_start = start;
    req.time_limit = std::numeric_limits<double>::infinity();
    const SubIpResult got = solve_subip(req);
    const auto exact = oracle::brute_force(oracle::dense(*inst), mask, start.values);
    ++pairs;
    if (got.status == SubIpStatus::kOptimal && got.solution.objective_value == exact.objective) ++equal;
  }
  v.require(equal == pairs, std::to_string(pairs - equal) + " pairs disagree with enumeration");
  v.note(std::to_string(equal) + "/" + std::to_string(pairs) + " pairs exact");
  return v.done();
}

Outcome reward_telescoping() {
  Verdict v;
  InternalRepair backend;
  int rollouts = 0;
  double worst = 0.0, min_reward = std::numeric_limits<double>::infinity();
  for (Family family : kFamilies) {
    for (std::uint64_t s = 0; s < 2; ++s) {
      const auto inst = desk(family, derive_seed(303, s));
      const auto data = PreparedInstance::make(inst, FeatureMode::kFull);
      const Solution start = initial_solution(*inst, 0.2, backend, TimeSource::kWork);
      ActorNet actor(data->var_width(), s);
      UniformLns ulns;
      RandomLns rlns(3);
      LearnedPolicy learned(actor);
      for (DestroyPolicy* policy : std::vector<DestroyPolicy*>{&ulns, &rlns, &learned}) {
        EpisodeConfig config;
        config.step_limit = 15;
        config.repair_time_limit = 0.5;
        config.clock = TimeSource::kWork;
        Episode episode(data, start, config);
        Rng rng(derive_seed(304, rollouts));
        const RolloutResult r = rollout(episode, *policy, backend, rng, false);
        double sum = 0.0;
        for (const StepRecord& step : r.trace) {
          sum += step.reward;
          min_reward = std::min(min_reward, step.reward);
        }
        const double drop = evaluate(*inst, start.values) - evaluate(*inst, r.final_solution.values);
        worst = std::max(worst, std::abs(sum - drop));
        ++rollouts;
      }
    }
  }
  v.require(worst <= 1e-9, "reward sum differs from the objective drop");
  v.require(min_reward >= 0.0, "negative reward");
  v.note(std::to_string(rollouts) + " rollouts, max |sum r - drop| = " + fmt(worst) + ", min r = " + fmt(min_reward));
  return v.done();
}

// Six variables, four covering rows.
std::shared_ptr<const IpInstance> toy_instance() {
  const std::vector<std::vector<int>> rows{{0, 1, 2}, {2, 3}, {1, 4, 5}, {0, 3, 5}};
  std::vector<Triplet> trips;
  for (int j = 0; j < static_cast<int>(rows.size()); ++j)
    for (int i : rows[j]) trips.push_back({j, i, -1.0});
  return std::make_shared<const IpInstance>("toy", std::vector<double>{3, 2, 4, 1, 5, 2},
                                            std::vector<double>(rows.size(), -1.0), trips);
}

double probe_gradients(ParameterSet& params, const std::function<double()>& f, int count, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    Parameter& p = params[rng.index(static_cast<int>(params.size()))];
    const int idx = rng.index(static_cast<int>(p.value.size()));
    const double analytic = p.grad.data()[idx];
    const double fd = oracle::central_difference(f, p.value.data()[idx], 1e-5);
    worst = std::max(worst, oracle::relative_error(analytic, fd, 1e-7));
  }
  return worst;
}

Outcome gradient_fidelity() {
  Verdict v;
  InternalRepair backend;
  const auto inst = toy_instance();
  const auto data = PreparedInstance::make(inst, FeatureMode::kFull);
  EpisodeConfig config;
  config.step_limit = 4;
  Episode episode(data, Solution::of(*inst, Assignment(6, 1)), config);
  UniformLns ulns;
  Rng rng(404);
  const RolloutResult r = rollout(episode, ulns, backend, rng, true);
  std::vector<const Transition*> batch;
  for (const Transition& t : r.transitions) batch.push_back(&t);
  v.require(batch.size() == 4 && batch.front()->state.n_vars() == 6 && batch.front()->state.n_cons() == 4,
            "toy rollout has the wrong shape");

  const double gamma = 0.99, eps = kDefaultClip;
  ActorNet actor(data->var_width(), 405);
  CriticNet critic(data->var_width(), 406);

  std::vector<double> targets, q;
  for (const Transition* t : batch) {
    targets.push_back(t->reward + gamma * critic.value(t->next_state, t->next_action));
    q.push_back(critic.value(t->state, t->action));
  }
  auto critic_f = [&]() {
    double loss = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const double d = targets[b] - critic.value(batch[b]->state, batch[b]->action);
      loss += d * d;
    }
    return loss / static_cast<double>(batch.size());
  };
  auto actor_f = [&]() {
    double total = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b)
      total += q[b] * log_prob(clip_probs(actor.probabilities(batch[b]->state), eps), batch[b]->action);
    return -total / static_cast<double>(batch.size());
  };

  critic.params().zero_grad();
  {
    Tape tape;
    tape.backward(critic_loss(tape, batch, critic, gamma));
  }
  const double critic_err = probe_gradients(critic.params(), critic_f, 200, 407);

  actor.params().zero_grad();
  {
    Tape tape;
    tape.backward(actor_loss(tape, batch, actor, critic, eps));
  }
  const double actor_err = probe_gradients(actor.params(), actor_f, 200, 408);

  v.require(critic_err <= 1e-3, "critic gradient error " + fmt(critic_err));
  v.require(actor_err <= 1e-3, "actor gradient error " + fmt(actor_err));
  v.note("200 probes each, max relative error actor " + fmt(actor_err) + ", critic " + fmt(critic_err));
  return v.done();
}

BipartiteState permuted(const BipartiteState& s, const std::vector<int>& pv, const std::vector<int>& pc) {
  BipartiteState t;
  t.var_features.resize(s.var_features.rows(), s.var_features.cols());
  t.con_features.resize(s.con_features.rows(), 1);
  for (int i = 0; i < s.n_vars(); ++i) t.var_features.row(i) = s.var_features.row(pv[i]);
  for (int j = 0; j < s.n_cons(); ++j) t.con_features.row(j) = s.con_features.row(pc[j]);
  std::vector<int> inv_v(pv.size()), inv_c(pc.size());
  for (std::size_t i = 0; i < pv.size(); ++i) inv_v[pv[i]] = static_cast<int>(i);
  for (std::size_t j = 0; j < pc.size(); ++j) inv_c[pc[j]] = static_cast<int>(j);
  std::vector<Eigen::Triplet<double>> trips;
  for (int r = 0; r < s.edges->outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(*s.edges, r); it; ++it)
      trips.emplace_back(inv_c[it.row()], inv_v[it.col()], it.value());
  auto a = std::make_shared<SparseMatrix>(s.n_cons(), s.n_vars());
  a->setFromTriplets(trips.begin(), trips.end());
  t.edges = a;
  return t;
}

Outcome generalization() {
  Verdict v;
  InternalRepair backend;
  const fs::path dir = scratch("generalization");
  {
    std::vector<TrainingInstance> pool =
        prepare_pool({desk(Family::kSetCover, 505)}, FeatureMode::kFull, 0.2, backend, TimeSource::kWork);
    TrainConfig c;
    c.iterations = 1;
    c.instances_per_iter = 1;
    c.step_limit = 4;
    c.updates = 2;
    c.clock = TimeSource::kWork;
    c.seed = 505;
    Trainer trainer(c, pool, backend);
    trainer.train();
    save_actor((dir / "actor.ckpt").string(), trainer.actor());
  }
  const ActorNet actor = load_actor((dir / "actor.ckpt").string());
  const std::vector<double> before = actor.params().flatten_values();
  std::string sizes;
  double worst = 0.0;
  for (int scale : {1, 2, 4}) {
    const auto inst = desk(Family::kSetCover, 506, scale);
    const auto data = PreparedInstance::make(inst, FeatureMode::kFull);
    EpisodeConfig config;
    config.step_limit = 3;
    config.clock = TimeSource::kWork;
    Episode episode(data, trivial_feasible_point(*inst), config);
    LearnedPolicy policy(actor);
    Rng rng(scale);
    const RolloutResult r = rollout(episode, policy, backend, rng, false);
    const BipartiteState s = episode.state();
    const std::vector<double> p = actor.probabilities(s);
    v.require(static_cast<int>(p.size()) == inst->n_vars(), "output size does not match n");
    v.require(r.trace.size() == 3, "episode did not run its steps");
    sizes += (sizes.empty() ? "" : "/") + std::to_string(p.size());

    const std::vector<int> pv = rng.permutation(s.n_vars()), pc = rng.permutation(s.n_cons());
    const std::vector<double> pp = actor.probabilities(permuted(s, pv, pc));
    for (int i = 0; i < s.n_vars(); ++i) worst = std::max(worst, std::abs(pp[i] - p[pv[i]]));
  }
  v.require(sizes == "200/400/800", "unexpected column counts " + sizes);
  v.require(actor.params().flatten_values() == before, "parameters changed during evaluation");
  v.require(worst <= 1e-9, "permutation equivariance error " + fmt(worst));
  v.note("outputs " + sizes + ", equivariance error " + fmt(worst));
  fs::remove_all(dir);
  return v.done();
}

TrainingInstance golden_item(std::uint64_t seed, int* golden) {
  const GoldenInstance g = golden_variable_instance(20, seed);
  if (golden) *golden = g.golden;
  const int n = g.instance->n_vars();
  return TrainingInstance{PreparedInstance::make(g.instance, FeatureMode::kFull),
                          Solution::of(*g.instance, Assignment(n, 1))};
}

Outcome learning_signal() {
  Verdict v;
  InternalRepair backend;
  std::vector<TrainingInstance> pool;
  for (std::uint64_t s = 0; s < 20; ++s) pool.push_back(golden_item(s, nullptr));
  TrainConfig c;
  c.iterations = 50;
  c.instances_per_iter = 10;
  c.step_limit = 5;
  c.updates = 2;
  c.actor_lr = 1e-3;
  c.critic_lr = 1e-3;
  c.clock = TimeSource::kWork;
  c.seed = 606;
  Trainer trainer(c, pool, backend);
  trainer.train();

  // Held-out members of the family, each at its all-ones state.
  double mean = 0.0;
  for (std::uint64_t s = 1000; s < 1020; ++s) {
    int golden = 0;
    const TrainingInstance item = golden_item(s, &golden);
    EpisodeConfig config;
    config.step_limit = 1;
    const Episode episode(item.data, item.initial, config);
    mean += clip_probs(trainer.actor().probabilities(episode.state()), c.epsilon)[golden] / 20.0;
  }
  const double threshold = 1.0 - c.epsilon - 0.05;
  v.require(mean >= threshold, "golden probability " + fmt(mean) + " below " + fmt(threshold));
  v.note("mean golden probability " + fmt(mean) + " over 20 states");
  return v.done();
}

// Learned, R-LNS and U-LNS on the desk SC test split, then FT-LNS against
// R-LNS on the short-horizon protocol.
Outcome method_ordering() {
  Verdict v;
  const fs::path dir = scratch("ordering");
  ExperimentConfig config;
  config.family = Family::kSetCover;
  config.train_count = 40;
  config.test_count = 50;
  config.time_limit = 30.0;
  config.clock = TimeSource::kWork;
  config.seed = 707;
  config.output_dir = dir;
  config.train.iterations = 20;
  config.train.instances_per_iter = 4;
  config.train.step_limit = 50;
  config.train.updates = 4;
  config.train.clock = config.clock;
  config.train.seed = config.seed;
  config.ft.clock = config.clock;
  config.ft.groups = 3;
  config.ft.seed = config.seed;
  const int rlns_groups = 3;
  InternalRepair backend;

  const auto t0 = std::chrono::steady_clock::now();
  const auto train_set = make_dataset(config, Split::kTrain);
  const std::vector<TrainingInstance> pool =
      prepare_pool(train_set, config.feature_mode, config.init_time_limit, backend, config.clock);
  Trainer trainer(config.train, pool, backend);
  trainer.train();
  save_actor((dir / "learned.ckpt").string(), trainer.actor());
  const std::vector<TrainingInstance> ft_pool(pool.begin(), pool.begin() + 10);
  save_actor((dir / "ftlns.ckpt").string(), ft_lns_train(config.ft, ft_pool, backend));
  const double train_s = seconds_since(t0);

  const auto test_set = make_dataset(config, Split::kTest);
  MethodSpec learned{"learned", "learned", (dir / "learned.ckpt").string()};
  MethodSpec rlns{"rlns", "rlns", "", rlns_groups};
  MethodSpec ulns{"ulns", "ulns"};
  MethodSpec ftlns{"ftlns", "ftlns", (dir / "ftlns.ckpt").string()};

  config.methods = {learned, rlns, ulns};
  const SuiteResult main = evaluate_suite(config, test_set, backend);
  const double l = main.method("learned").mean_gap_pct;
  const double r = main.method("rlns").mean_gap_pct;
  const double u = main.method("ulns").mean_gap_pct;

  config.methods = {ftlns, rlns};
  const SuiteResult shorth = short_horizon_eval(config, test_set, backend);
  const double fs_gap = shorth.method("ftlns").mean_gap_pct;
  const double rs_gap = shorth.method("rlns").mean_gap_pct;

  v.require(l <= r, "learned gap above R-LNS");
  v.require(l <= u, "learned gap above U-LNS");
  v.require(fs_gap <= rs_gap, "FT-LNS gap above R-LNS on the short horizon");
  v.note("mean gap % learned " + fmt(l) + ", rlns " + fmt(r) + ", ulns " + fmt(u) + "; short horizon ftlns " +
         fmt(fs_gap) + ", rlns " + fmt(rs_gap) + "; training " + fmt(train_s) + " s");
  fs::remove_all(dir);
  return v.done();
}

Outcome table_sizes() {
  Verdict v;
  std::string report;
  auto within = [](int got, int want, double frac) { return std::abs(got - want) <= frac * want; };
  const IpInstance sc = generate(paper_preset(Family::kSetCover, 1, 801));
  const IpInstance ca = generate(paper_preset(Family::kAuction, 1, 802));
  const IpInstance mc = generate(paper_preset(Family::kMaxCut, 1, 803));
  const IpInstance mis = generate(paper_preset(Family::kIndependentSet, 1, 804));
  v.require(sc.n_vars() == 1000 && sc.n_cons() == 5000, "SC size");
  v.require(ca.n_vars() == 4000 && within(ca.n_cons(), 2674, 0.10), "CA size");
  v.require(mc.n_vars() == 2975 && mc.n_cons() == 4950, "MC size");
  v.require(mis.n_vars() == 1500 && within(mis.n_cons(), 5939, 0.02), "MIS size");
  for (const IpInstance* inst : {&sc, &ca, &mc, &mis})
    report += (report.empty() ? "" : ", ") + std::to_string(inst->n_vars()) + "x" + std::to_string(inst->n_cons());
  v.note("vars x cons " + report);
  return v.done();
}

// Small members of each family; every instance has at most 20 variables.
IpInstance small_instance(int k) {
  const std::uint64_t seed = derive_seed(909, k);
  switch (k % 4) {
    case 0: return generate_sc(30, 20, 0.2, seed);
    case 1: return generate_mis(20, 4, seed);
    case 2: return generate_ca(10, 20, seed);
    default: return generate_mc(7, 2, seed);
  }
}

Outcome lp_sanity() {
  Verdict v;
  int count = 0;
  double worst_rc = 0.0, worst_excess = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 100; ++k) {
    const IpInstance inst = small_instance(k);
    v.require(inst.n_vars() <= 20, "instance " + inst.name() + " has " + std::to_string(inst.n_vars()) + " vars");
    const LpSolution lp = solve_lp(inst);
    v.require(lp.status == LpStatus::kOptimal, "LP not optimal on " + inst.name());
    const double opt = oracle::enumerate_pruned(oracle::dense(inst)).objective;
    worst_excess = std::max(worst_excess, lp.objective - opt);
    for (int i = 0; i < inst.n_vars(); ++i)
      if (lp.basis_status[i] == BasisStatus::kBasic) worst_rc = std::max(worst_rc, std::abs(lp.reduced_costs[i]));
    ++count;
  }
  v.require(worst_excess <= 1e-9, "LP bound above the integer optimum");
  v.require(worst_rc <= 1e-6, "basic reduced cost " + fmt(worst_rc));
  v.note(std::to_string(count) + " instances, max LP - IP = " + fmt(worst_excess) + ", max basic |rc| = " +
         fmt(worst_rc));
  return v.done();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome determinism() {
  Verdict v;
  const fs::path dir = scratch("determinism");
  {
    std::ofstream cfg(dir / "config.json");
    cfg << R"({"family":"sc","clock":"work","train_count":4,"seed":1010,)"
        << R"("train":{"iterations":5,"instances_per_iter":2,"step_limit":8,"updates":2}})";
  }
  std::vector<std::string> csv;
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string(LNSPOLICY_CLI_PATH) + " train --config " + (dir / "config.json").string() +
                            " --out " + (dir / run).string() + " > " + (dir / (std::string(run) + ".log")).string() +
                            " 2>&1";
    v.require(std::system(cmd.c_str()) == 0, "train exited with an error");
    csv.push_back(slurp(dir / run / "metrics.csv"));
  }
  const long lines = std::count(csv[0].begin(), csv[0].end(), '\n');
  v.require(lines == 6, "metrics CSV has " + std::to_string(lines) + " lines");
  v.require(csv[0] == csv[1], "metrics CSV differs between runs");
  v.note(std::to_string(csv[0].size()) + " identical bytes");
  fs::remove_all(dir);
  return v.done();
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // wall-time limit; infinity when none
  Outcome (*run)();
};

constexpr double kNoLimit = std::numeric_limits<double>::infinity();

const std::vector<Criterion> kCriteria{
    {1, "factorization", 5.0, factorization},
    {2, "repair oracle", 120.0, repair_oracle},
    {3, "reward telescoping", kNoLimit, reward_telescoping},
    {4, "gradient fidelity", 60.0, gradient_fidelity},
    {5, "generalization mechanics", kNoLimit, generalization},
    {6, "learning signal", 600.0, learning_signal},
    {7, "method ordering", 7200.0, method_ordering},
    {8, "table sizes", 60.0, table_sizes},
    {9, "LP sanity", kNoLimit, lp_sanity},
    {10, "determinism", kNoLimit, determinism},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int a = 1; a < argc; ++a) selected.push_back(std::atoi(argv[a]));
  bool all_pass = true;
  for (const Criterion& c : kCriteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = seconds_since(t0);
    if (out.pass && elapsed > c.limit_s) out = {false, "took " + fmt(elapsed) + " s, limit " + fmt(c.limit_s) + " s"};
    all_pass = all_pass && out.pass;
    std::printf("%s criterion %d (%s, %.1f s): %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name, elapsed,
                out.detail.c_str());
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
