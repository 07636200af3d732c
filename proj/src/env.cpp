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

#include "lnspolicy/env.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "lnspolicy/errors.hpp"

namespace lns {

std::shared_ptr<const PreparedInstance> PreparedInstance::make(std::shared_ptr<const IpInstance> instance,
                                                               FeatureMode mode) {
  if (!instance) throw ContractError("PreparedInstance: null instance");
  auto data = std::make_shared<PreparedInstance>();
  data->edges = edge_matrix(*instance);
  data->static_features = lns::static_features(*instance, mode);
  data->con_features = constraint_features(*instance);
  data->mode = mode;
  data->instance = std::move(instance);
  return data;
}

Episode::Episode(std::shared_ptr<const PreparedInstance> data, Solution initial, EpisodeConfig config)
    : data_(std::move(data)), config_(config), current_(initial), tracker_(initial),
      initial_objective_(initial.objective_value), start_(std::chrono::steady_clock::now()) {
  if (!data_) throw ContractError("Episode: null instance data");
  if (initial.size() != data_->instance->n_vars()) throw DimensionError("Episode: initial solution length mismatch");
  if (!is_feasible(*data_->instance, initial.values)) throw ContractError("Episode: initial solution is infeasible");
  if (!config_.step_limit && !config_.time_budget) throw ConfigError("Episode needs a step limit or a time budget");
  if (config_.step_limit && *config_.step_limit < 0) throw ConfigError("step limit must be non-negative");
  if (!(config_.repair_time_limit > 0.0)) throw ConfigError("repair time limit must be positive");
}

double Episode::elapsed() const {
  if (config_.clock == TimeSource::kWork) return work_elapsed_;
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

void Episode::charge_work(double seconds) {
  if (!(seconds >= 0.0)) throw ContractError("work charge must be non-negative");
  work_elapsed_ += seconds;
}

bool Episode::done() const {
  if (config_.step_limit && step_ >= *config_.step_limit) return true;
  return config_.time_budget && elapsed() >= *config_.time_budget;
}

BipartiteState Episode::state() const {
  const int n = data_->instance->n_vars();
  const Matrix& stat = data_->static_features;
  BipartiteState s;
  s.edges = data_->edges;
  s.con_features = data_->con_features;
  s.var_features.resize(n, stat.cols() + kDynamicFeatureCount);
  s.var_features.leftCols(stat.cols()) = stat;
  const Eigen::Index base = stat.cols();
  const Solution& best = tracker_.best();
  for (int i = 0; i < n; ++i) {
    s.var_features(i, base) = current_.values[i];
    s.var_features(i, base + 1) = best.values[i];
    s.var_features(i, base + 2) = tracker_.average(i);
  }
  return s;
}

StepOutcome Episode::step(const ActionMask& action, RepairBackend& backend) {
  const IpInstance& inst = *data_->instance;
  if (done()) throw ContractError("Episode::step on a finished episode");
  if (static_cast<int>(action.size()) != inst.n_vars()) throw DimensionError("action length does not match n_vars");
  if (!valid_mask(action)) throw ContractError("action must free at least one and fix at least one variable");

  SubIpRequest request;
  request.instance = &inst;
  request.free_mask = action;
  request.warm_start = current_;
  request.time_limit = config_.repair_time_limit;
  request.clock = config_.clock;
  if (config_.time_budget)
    request.time_limit = std::min(request.time_limit, std::max(*config_.time_budget - elapsed(), 0.0));

  SubIpResult result;
  const auto wall0 = std::chrono::steady_clock::now();
  try {
    result = backend.solve(request);
  } catch (const AdapterError& e) {
    throw AdapterError("step " + std::to_string(step_) + ": " + e.what(), e.raw_output());
  } catch (const Error& e) {
    throw Error("step " + std::to_string(step_) + " repair failed: " + e.what());
  }
  const double wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall0).count();

  for (int i = 0; i < inst.n_vars(); ++i)
    if (!action[i] && result.solution.values[i] != current_.values[i])
      throw ContractError("repair changed a fixed variable");
  if (result.solution.objective_value > current_.objective_value)
    throw ContractError("repair returned a worse solution");

  const double reward = current_.objective_value - result.solution.objective_value;
  if (reward > 0.0) tracker_.record(inst, result.solution);
  current_ = std::move(result.solution);
  if (std::abs(tracker_.best().objective_value - current_.objective_value) > kObjectiveTol)
    throw ContractError("incumbent diverged from the current solution");

  work_elapsed_ += result.elapsed;
  ++step_;
  StepRecord rec;
  rec.step = step_;
  rec.action_size = static_cast<int>(std::count(action.begin(), action.end(), std::uint8_t{1}));
  rec.reward = reward;
  rec.objective = current_.objective_value;
  rec.elapsed_ms = config_.clock == TimeSource::kWork ? result.elapsed * 1000.0 : wall_ms;
  rec.time_s = elapsed();
  rec.repair_status = result.status;
  trace_.push_back(rec);
  return {reward, done()};
}

ActionMask uniform_lns_mask(int n, Rng& rng) {
  if (n < 2) throw ContractError("uniform_lns_mask needs at least two variables");
  const int k = static_cast<int>(rng.uniform_int(1, n - 1));
  ActionMask mask(n, 0);
  for (int i : rng.sample(n, k)) mask[i] = 1;
  return mask;
}

ActionMask UniformLns::select(const Episode& episode, Rng& rng) {
  return uniform_lns_mask(episode.instance().n_vars(), rng);
}

std::vector<ActionMask> random_partition(int n, int groups, Rng& rng) {
  if (groups < 2 || groups > n) throw ConfigError("partition needs 2 <= groups <= n");
  const std::vector<int> perm = rng.permutation(n);
  std::vector<ActionMask> masks(groups, ActionMask(n, 0));
  int pos = 0;
  for (int g = 0; g < groups; ++g) {
    const int size = n / groups + (g < n % groups ? 1 : 0);
    for (int k = 0; k < size; ++k) masks[g][perm[pos++]] = 1;
  }
  return masks;
}

RandomLns::RandomLns(int groups) : groups_(groups) {
  if (groups < 2 || groups > 5) throw ConfigError("R-LNS group count must lie in [2, 5]");
}

void RandomLns::reset(const Episode& episode, Rng& rng) {
  cycle_ = random_partition(episode.instance().n_vars(), groups_, rng);
  next_ = 0;
}

ActionMask RandomLns::select(const Episode& episode, Rng& rng) {
  if (cycle_.empty() || next_ == cycle_.size() ||
      static_cast<int>(cycle_.front().size()) != episode.instance().n_vars()) {
    cycle_ = random_partition(episode.instance().n_vars(), groups_, rng);
    next_ = 0;
  }
  return cycle_[next_++];
}

LearnedPolicy::LearnedPolicy(const ActorNet& actor, double epsilon, std::string label, bool reuse_probabilities)
    : actor_(&actor), epsilon_(epsilon), label_(std::move(label)), reuse_(reuse_probabilities) {
  clip_probs(std::vector<double>{}, epsilon);
}

void LearnedPolicy::reset(const Episode& episode, Rng& rng) {
  (void)episode;
  (void)rng;
  cached_data_ = nullptr;
  cached_p_.clear();
}

bool LearnedPolicy::cache_matches(const Episode& episode) const {
  return reuse_ && cached_data_ == &episode.data() && cached_history_ == episode.tracker().history_count() &&
         cached_current_ == episode.current().values;
}

ActionMask LearnedPolicy::select(const Episode& episode, Rng& rng) {
  last_hit_ = cache_matches(episode);
  if (!last_hit_) {
    cached_p_ = clip_probs(actor_->probabilities(episode.state()), epsilon_);
    cached_data_ = &episode.data();
    cached_history_ = episode.tracker().history_count();
    cached_current_ = episode.current().values;
    ++forward_passes_;
  }
  return sample_action(cached_p_, rng).mask;
}

double LearnedPolicy::work_cost(const Episode& episode) const {
  if (last_hit_) return 0.0;
  return kWorkPerGraphNode * (episode.instance().n_vars() + episode.instance().n_cons());
}

namespace {

ActionMask charged_select(DestroyPolicy& policy, Episode& episode, Rng& rng) {
  ActionMask mask = policy.select(episode, rng);
  episode.charge_work(policy.work_cost(episode));
  return mask;
}

}  // namespace

RolloutResult rollout(Episode& episode, DestroyPolicy& policy, RepairBackend& backend, Rng& rng,
                      bool record_transitions) {
  RolloutResult out;
  out.initial_objective = episode.current().objective_value;
  policy.reset(episode, rng);
  if (!episode.done()) {
    ActionMask action = charged_select(policy, episode, rng);
    BipartiteState state;
    if (record_transitions) state = episode.state();
    // The select charge alone can exhaust the budget.
    while (!episode.done()) {
      const StepOutcome step = episode.step(action, backend);
      out.total_reward += step.reward;
      if (!record_transitions && step.done) break;
      ActionMask next = charged_select(policy, episode, rng);
      if (record_transitions) {
        BipartiteState next_state = episode.state();
        out.transitions.push_back(Transition{state, action, step.reward, next_state, next});
        state = std::move(next_state);
      }
      if (step.done) break;
      action = std::move(next);
    }
  }
  out.final_solution = episode.current();
  out.elapsed = episode.elapsed();
  out.trace = episode.trace();
  return out;
}

void write_trace_jsonl(std::ostream& out, const std::vector<StepRecord>& trace) {
  for (const StepRecord& r : trace) {
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["action_size"] = r.action_size;
    j["reward"] = r.reward;
    j["objective"] = r.objective;
    j["elapsed_ms"] = r.elapsed_ms;
    j["repair_status"] = to_string(r.repair_status);
    out << j.dump() << '\n';
  }
}

}  // namespace lns
