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

#include <chrono>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lnspolicy/clock.hpp"
#include "lnspolicy/features.hpp"
#include "lnspolicy/policy.hpp"
#include "lnspolicy/repair.hpp"

namespace lns {

// Per-instance data shared by every episode on that instance.
struct PreparedInstance {
  std::shared_ptr<const IpInstance> instance;
  std::shared_ptr<const SparseMatrix> edges;
  Matrix static_features;
  Matrix con_features;
  FeatureMode mode = FeatureMode::kFull;

  static std::shared_ptr<const PreparedInstance> make(std::shared_ptr<const IpInstance> instance, FeatureMode mode);
  int var_width() const { return static_cast<int>(static_features.cols()) + kDynamicFeatureCount; }
};

struct EpisodeConfig {
  std::optional<int> step_limit = 50;  // T; unset runs until the time budget
  std::optional<double> time_budget;   // seconds on `clock`
  double repair_time_limit = kDefaultRepairTimeLimit;
  TimeSource clock = TimeSource::kWall;
};

struct StepRecord {
  int step = 0;
  int action_size = 0;
  double reward = 0.0;
  double objective = 0.0;
  double elapsed_ms = 0.0;  // this step's repair
  double time_s = 0.0;      // episode time after the step
  SubIpStatus repair_status = SubIpStatus::kTimeLimit;
};

struct StepOutcome {
  double reward = 0.0;
  bool done = false;
};

class Episode {
 public:
  // Throws ContractError if `initial` is infeasible. Needs a step limit or a
  // time budget.
  Episode(std::shared_ptr<const PreparedInstance> data, Solution initial, EpisodeConfig config);

  // Static features followed by current value, incumbent value and average
  // incumbent value.
  BipartiteState state() const;

  // Repairs with the action's variables free. Throws ContractError for an
  // invalid mask or a finished episode; repair errors are rethrown with the
  // step number attached.
  StepOutcome step(const ActionMask& action, RepairBackend& backend);

  bool done() const;
  double elapsed() const;
  // Adds decision-making cost to the work clock; the wall clock measures it
  // directly.
  void charge_work(double seconds);
  const IpInstance& instance() const { return *data_->instance; }
  const PreparedInstance& data() const { return *data_; }
  const Solution& current() const { return current_; }
  const IncumbentTracker& tracker() const { return tracker_; }
  double initial_objective() const { return initial_objective_; }
  int steps() const { return step_; }
  const std::vector<StepRecord>& trace() const { return trace_; }
  const EpisodeConfig& config() const { return config_; }

 private:
  std::shared_ptr<const PreparedInstance> data_;
  EpisodeConfig config_;
  Solution current_;
  IncumbentTracker tracker_;
  double initial_objective_;
  int step_ = 0;
  double work_elapsed_ = 0.0;
  std::chrono::steady_clock::time_point start_;
  std::vector<StepRecord> trace_;
};

class DestroyPolicy {
 public:
  virtual ~DestroyPolicy() = default;
  // Called once before an episode's first step.
  virtual void reset(const Episode& episode, Rng& rng) {
    (void)episode;
    (void)rng;
  }
  virtual ActionMask select(const Episode& episode, Rng& rng) = 0;
  virtual std::string name() const = 0;
  // Modelled cost of the most recent select() call in work seconds.
  virtual double work_cost(const Episode& episode) const {
    (void)episode;
    return 0.0;
  }
};

// Subset size uniform in [1, n-1], then a uniform subset of that size.
ActionMask uniform_lns_mask(int n, Rng& rng);

class UniformLns final : public DestroyPolicy {
 public:
  ActionMask select(const Episode& episode, Rng& rng) override;
  std::string name() const override { return "ulns"; }
};

// Random partition into `groups` near-equal chunks, visited in order and
// reshuffled after every full cycle.
std::vector<ActionMask> random_partition(int n, int groups, Rng& rng);

class RandomLns final : public DestroyPolicy {
 public:
  // Throws ConfigError unless 2 <= groups <= 5.
  explicit RandomLns(int groups);
  void reset(const Episode& episode, Rng& rng) override;
  ActionMask select(const Episode& episode, Rng& rng) override;
  std::string name() const override { return "rlns"; }
  int groups() const { return groups_; }

 private:
  int groups_;
  std::vector<ActionMask> cycle_;
  std::size_t next_ = 0;
};

// Samples from a clipped actor. The actor must outlive the policy.
//
// A repair that changes nothing leaves the state as it was, so the last
// probabilities are reused until the current solution or the incumbent
// history moves; such a select() costs no forward pass. Pass
// reuse_probabilities = false when the actor changes during an episode.
class LearnedPolicy final : public DestroyPolicy {
 public:
  LearnedPolicy(const ActorNet& actor, double epsilon = kDefaultClip, std::string label = "learned",
                bool reuse_probabilities = true);
  void reset(const Episode& episode, Rng& rng) override;
  ActionMask select(const Episode& episode, Rng& rng) override;
  std::string name() const override { return label_; }
  // Cost of the most recent select().
  double work_cost(const Episode& episode) const override;
  int forward_passes() const { return forward_passes_; }

 private:
  bool cache_matches(const Episode& episode) const;

  const ActorNet* actor_;
  double epsilon_;
  std::string label_;
  bool reuse_;
  const PreparedInstance* cached_data_ = nullptr;
  int cached_history_ = -1;
  Assignment cached_current_;
  std::vector<double> cached_p_;
  bool last_hit_ = false;
  int forward_passes_ = 0;
};

struct Transition {
  BipartiteState state;
  ActionMask action;
  double reward = 0.0;
  BipartiteState next_state;
  ActionMask next_action;
};

struct RolloutResult {
  Solution final_solution;
  double initial_objective = 0.0;
  double total_reward = 0.0;
  double elapsed = 0.0;
  std::vector<StepRecord> trace;
  std::vector<Transition> transitions;
};

// Destroy-repair loop until the episode is done. With record_transitions the
// next action is sampled after every step, so each transition carries the
// action actually taken next (the final one is sampled but not executed).
RolloutResult rollout(Episode& episode, DestroyPolicy& policy, RepairBackend& backend, Rng& rng,
                      bool record_transitions = false);

// One JSON object per line: step, action_size, reward, objective,
// elapsed_ms, repair_status.
void write_trace_jsonl(std::ostream& out, const std::vector<StepRecord>& trace);

}  // namespace lns
