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
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lnspolicy/env.hpp"

namespace lns {

// An instance ready for training: features computed, initial solution fixed.
struct TrainingInstance {
  std::shared_ptr<const PreparedInstance> data;
  Solution initial;
};

// Prepares features and runs initial_solution for each instance.
std::vector<TrainingInstance> prepare_pool(const std::vector<std::shared_ptr<const IpInstance>>& instances,
                                           FeatureMode mode, double init_budget, RepairBackend& backend,
                                           TimeSource clock = TimeSource::kWall);

struct TrainConfig {
  int iterations = 10;          // J
  int instances_per_iter = 10;  // M
  int step_limit = 50;          // T
  int updates = 4;              // U; batch size is T*M/U
  double gamma = 0.99;
  double actor_lr = 1e-4;
  double critic_lr = 1e-4;
  double epsilon = kDefaultClip;
  double repair_time_limit = kDefaultRepairTimeLimit;
  double grad_clip = 10.0;
  bool q_baseline = false;  // subtract the batch-mean Q in the actor objective
  TimeSource clock = TimeSource::kWall;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0 disables
  std::filesystem::path checkpoint_dir;

  // Fixed batch size drawn independently per pass; unset means T*M/U with
  // every transition used exactly once per iteration.
  std::optional<int> batch_override;

  int batch_size() const { return batch_override ? *batch_override : step_limit * instances_per_iter / updates; }
  // Throws ConfigError unless every count is positive and, without an
  // override, U divides T*M.
  void validate() const;
};

// Active-search preset: M=2, T=100, U=10 with batches of 32. Since
// 32 * 10 != 2 * 100, each pass draws its own batch without replacement.
TrainConfig active_search_config();

// Holds exactly T*M transitions per iteration; cleared between iterations.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}
  // Throws ContractError when full.
  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return items_.size() == capacity_; }
  void clear() { items_.clear(); }
  const Transition& operator[](std::size_t i) const { return items_[i]; }
  // A random permutation split into `count` consecutive equal batches, so
  // each transition is used exactly once. Requires count to divide size().
  std::vector<std::vector<const Transition*>> partition(int count, Rng& rng) const;
  // `size` distinct transitions drawn uniformly.
  std::vector<const Transition*> sample(int size, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
};

using Batch = std::span<const Transition* const>;

// mean_b (r_b + gamma Q(s'_b, a'_b) - Q(s_b, a_b))^2, the bootstrap target
// entering as a constant. Built on one tape.
Tensor critic_loss(Tape& tape, Batch batch, const CriticNet& critic, double gamma);
// -mean_b Q_b * log pi(a_b | s_b), Q_b constant (minus the batch mean when
// q_baseline is set). Minimizing it ascends the policy objective.
Tensor actor_loss(Tape& tape, Batch batch, const ActorNet& actor, const CriticNet& critic, double epsilon,
                  bool q_baseline = false);

// Same losses with one tape per transition; gradients are added to the
// networks' parameter grads. Return the loss value.
double accumulate_critic_loss(Batch batch, CriticNet& critic, double gamma);
double accumulate_actor_loss(Batch batch, ActorNet& actor, const CriticNet& critic, double epsilon,
                             bool q_baseline = false);

struct IterationMetrics {
  int iter = 0;
  double mean_return = 0.0;
  double mean_final_obj = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double wall_s = 0.0;  // work seconds under the work clock
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const IterationMetrics& m);

// Q-actor-critic: each iteration rolls out M episodes of T steps, then runs
// U passes of critic step followed by actor step.
class Trainer {
 public:
  Trainer(TrainConfig config, std::vector<TrainingInstance> pool, RepairBackend& backend);

  // Throws TrainingError, with a dump of the offending batch, if a loss or
  // gradient is not finite.
  IterationMetrics train_iteration();
  // Runs the configured iterations, writing a metrics CSV row per iteration
  // when `metrics` is set.
  std::vector<IterationMetrics> train(std::ostream* metrics = nullptr);

  ActorNet& actor() { return actor_; }
  CriticNet& critic() { return critic_; }
  const TrainConfig& config() const { return config_; }
  int iterations_done() const { return iter_; }
  // Best solution seen per pool instance (same order as the pool).
  const std::vector<Solution>& best_solutions() const { return best_; }
  void save(const std::filesystem::path& actor_path, const std::filesystem::path& critic_path) const;

 private:
  TrainConfig config_;
  std::vector<TrainingInstance> pool_;
  RepairBackend* backend_;
  ActorNet actor_;
  CriticNet critic_;
  Adam actor_opt_;
  Adam critic_opt_;
  Rng rng_;
  int iter_ = 0;
  std::vector<Solution> best_;
};

// Forward-training imitation of the best of several R-LNS demonstrations.
struct FtConfig {
  int demos_per_instance = 10;
  int step_limit = 20;
  int groups = 2;
  int fit_steps = 5;  // Adam steps per visited state
  double learning_rate = 1e-3;
  double epsilon = kDefaultClip;
  double repair_time_limit = kDefaultRepairTimeLimit;
  TimeSource clock = TimeSource::kWall;
  std::uint64_t seed = 0;
};

// Mean per-variable binary cross-entropy of clipped probabilities.
double imitation_loss(const ActorNet& actor, const BipartiteState& state, std::span<const std::uint8_t> label,
                      double epsilon);
// One Adam step on the imitation loss; returns the loss before the step.
double imitation_step(ActorNet& actor, Adam& opt, const BipartiteState& state, std::span<const std::uint8_t> label,
                      double epsilon);

// Best-of-demos R-LNS trajectory masks for one instance.
std::vector<ActionMask> best_demo(const TrainingInstance& item, const FtConfig& config, RepairBackend& backend,
                                  Rng& rng);

ActorNet ft_lns_train(const FtConfig& config, const std::vector<TrainingInstance>& pool, RepairBackend& backend);

// Synthetic family: every variable but one is pinned to 1 by its own cover
// row; the remaining "golden" variable is unconstrained with positive cost.
// Starting from all ones, freeing the golden variable is the only way to
// improve.
struct GoldenInstance {
  std::shared_ptr<const IpInstance> instance;
  int golden = 0;
};
GoldenInstance golden_variable_instance(int n, std::uint64_t seed);

}  // namespace lns
