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

#include "lnspolicy/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "lnspolicy/clock.hpp"
#include "lnspolicy/errors.hpp"
#include "lnspolicy/mps.hpp"

namespace lns {
namespace {

// Records every mask the wrapped policy emits.
class RecordingPolicy final : public DestroyPolicy {
 public:
  explicit RecordingPolicy(DestroyPolicy& inner) : inner_(&inner) {}
  void reset(const Episode& episode, Rng& rng) override { inner_->reset(episode, rng); }
  ActionMask select(const Episode& episode, Rng& rng) override {
    masks.push_back(inner_->select(episode, rng));
    return masks.back();
  }
  std::string name() const override { return inner_->name(); }
  double work_cost(const Episode& episode) const override { return inner_->work_cost(episode); }
  std::vector<ActionMask> masks;

 private:
  DestroyPolicy* inner_;
};

std::vector<double> critic_values(Batch batch, const CriticNet& critic, bool next) {
  std::vector<double> q;
  q.reserve(batch.size());
  for (const Transition* t : batch)
    q.push_back(next ? critic.value(t->next_state, t->next_action) : critic.value(t->state, t->action));
  return q;
}

std::vector<double> actor_weights(Batch batch, const CriticNet& critic, bool q_baseline) {
  std::vector<double> q = critic_values(batch, critic, false);
  if (q_baseline && !q.empty()) {
    double mean = 0.0;
    for (double v : q) mean += v;
    mean /= static_cast<double>(q.size());
    for (double& v : q) v -= mean;
  }
  return q;
}

void require_batch(Batch batch) {
  if (batch.empty()) throw ContractError("loss on an empty batch");
}

Matrix scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

std::string batch_dump(Batch batch, const CriticNet& critic, double gamma) {
  std::ostringstream out;
  out << "batch of " << batch.size() << " transitions:";
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& t = *batch[b];
    const auto selected = std::count(t.action.begin(), t.action.end(), std::uint8_t{1});
    out << "\n  #" << b << " n=" << t.action.size() << " selected=" << selected << " reward=" << t.reward
        << " q=" << critic.value(t.state, t.action)
        << " target=" << t.reward + gamma * critic.value(t.next_state, t.next_action)
        << " features_finite=" << (t.state.var_features.allFinite() ? "yes" : "no");
  }
  return out.str();
}

}  // namespace

std::vector<TrainingInstance> prepare_pool(const std::vector<std::shared_ptr<const IpInstance>>& instances,
                                           FeatureMode mode, double init_budget, RepairBackend& backend,
                                           TimeSource clock) {
  std::vector<TrainingInstance> pool;
  pool.reserve(instances.size());
  for (const auto& inst : instances)
    pool.push_back({PreparedInstance::make(inst, mode), initial_solution(*inst, init_budget, backend, clock)});
  return pool;
}

void TrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("iterations must be non-negative");
  if (instances_per_iter <= 0 || step_limit <= 0 || updates <= 0)
    throw ConfigError("instances per iteration, step limit and updates must be positive");
  if (batch_override) {
    if (*batch_override <= 0 || *batch_override > step_limit * instances_per_iter)
      throw ConfigError("batch size must lie in [1, T*M]");
  } else if ((step_limit * instances_per_iter) % updates != 0) {
    throw ConfigError("updates must divide T*M so that B*U = T*M");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw ConfigError("clip epsilon must lie in [0, 0.5)");
  if (!(repair_time_limit > 0.0)) throw ConfigError("repair time limit must be positive");
  if (!(grad_clip > 0.0)) throw ConfigError("gradient clip must be positive");
  if (checkpoint_every < 0) throw ConfigError("checkpoint interval must be non-negative");
  if (checkpoint_every > 0 && checkpoint_dir.empty()) throw ConfigError("checkpoint interval set without a directory");
}

TrainConfig active_search_config() {
  TrainConfig c;
  c.instances_per_iter = 2;
  c.step_limit = 100;
  c.updates = 10;
  c.batch_override = 32;
  return c;
}

void ReplayBuffer::push(Transition t) {
  if (full()) throw ContractError("replay buffer is full");
  items_.push_back(std::move(t));
}

std::vector<std::vector<const Transition*>> ReplayBuffer::partition(int count, Rng& rng) const {
  if (count <= 0 || items_.size() % static_cast<std::size_t>(count) != 0)
    throw ContractError("batch count must divide the buffer size");
  const std::vector<int> perm = rng.permutation(static_cast<int>(items_.size()));
  const std::size_t size = items_.size() / count;
  std::vector<std::vector<const Transition*>> out(count);
  for (std::size_t k = 0; k < perm.size(); ++k) out[k / size].push_back(&items_[perm[k]]);
  return out;
}

std::vector<const Transition*> ReplayBuffer::sample(int size, Rng& rng) const {
  if (size <= 0 || static_cast<std::size_t>(size) > items_.size()) throw ContractError("bad sample size");
  std::vector<const Transition*> out;
  for (int i : rng.sample(static_cast<int>(items_.size()), size)) out.push_back(&items_[i]);
  return out;
}

Tensor critic_loss(Tape& tape, Batch batch, const CriticNet& critic, double gamma) {
  require_batch(batch);
  const std::vector<double> next_q = critic_values(batch, critic, true);
  Tensor total;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& t = *batch[b];
    Tensor diff = sub(tape.constant(scalar(t.reward + gamma * next_q[b])), critic.forward(tape, t.state, t.action));
    Tensor sq = mul(diff, diff);
    total = b == 0 ? sq : add(total, sq);
  }
  return scale(total, 1.0 / static_cast<double>(batch.size()));
}

Tensor actor_loss(Tape& tape, Batch batch, const ActorNet& actor, const CriticNet& critic, double epsilon,
                  bool q_baseline) {
  require_batch(batch);
  const std::vector<double> q = actor_weights(batch, critic, q_baseline);
  Tensor total;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& t = *batch[b];
    Tensor term = scale(log_prob(clip_probs(actor.forward(tape, t.state), epsilon), t.action), q[b]);
    total = b == 0 ? term : add(total, term);
  }
  return scale(total, -1.0 / static_cast<double>(batch.size()));
}

double accumulate_critic_loss(Batch batch, CriticNet& critic, double gamma) {
  require_batch(batch);
  const std::vector<double> next_q = critic_values(batch, critic, true);
  const double inv = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& t = *batch[b];
    Tape tape;
    Tensor diff = sub(tape.constant(scalar(t.reward + gamma * next_q[b])), critic.forward(tape, t.state, t.action));
    Tensor term = scale(mul(diff, diff), inv);
    loss += term.item();
    tape.backward(term);
  }
  return loss;
}

double accumulate_actor_loss(Batch batch, ActorNet& actor, const CriticNet& critic, double epsilon,
                             bool q_baseline) {
  require_batch(batch);
  const std::vector<double> q = actor_weights(batch, critic, q_baseline);
  const double inv = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& t = *batch[b];
    Tape tape;
    Tensor term = scale(log_prob(clip_probs(actor.forward(tape, t.state), epsilon), t.action), -q[b] * inv);
    loss += term.item();
    tape.backward(term);
  }
  return loss;
}

void write_metrics_header(std::ostream& out) {
  out << "iter,mean_return,mean_final_obj,actor_loss,critic_loss,wall_s\n";
}

void write_metrics_row(std::ostream& out, const IterationMetrics& m) {
  out << m.iter << ',' << format_double(m.mean_return) << ',' << format_double(m.mean_final_obj) << ','
      << format_double(m.actor_loss) << ',' << format_double(m.critic_loss) << ',' << format_double(m.wall_s)
      << '\n';
}

Trainer::Trainer(TrainConfig config, std::vector<TrainingInstance> pool, RepairBackend& backend)
    : config_(std::move(config)), pool_(std::move(pool)), backend_(&backend),
      actor_(pool_.empty() ? 1 : pool_.front().data->var_width(), derive_seed(config_.seed, 1)),
      critic_(pool_.empty() ? 1 : pool_.front().data->var_width(), derive_seed(config_.seed, 2)),
      actor_opt_(actor_.params(), AdamConfig{config_.actor_lr}),
      critic_opt_(critic_.params(), AdamConfig{config_.critic_lr}), rng_(derive_seed(config_.seed, 3)) {
  config_.validate();
  if (pool_.empty()) throw ConfigError("training pool is empty");
  for (const TrainingInstance& item : pool_) {
    if (item.data->var_width() != actor_.var_width())
      throw ConfigError("training instances disagree on the feature width");
    if (item.data->instance->n_vars() < 2) throw ConfigError("training instances need at least two variables");
    best_.push_back(item.initial);
  }
}

IterationMetrics Trainer::train_iteration() {
  const auto wall0 = std::chrono::steady_clock::now();
  IterationMetrics metrics;
  metrics.iter = ++iter_;
  ReplayBuffer buffer(static_cast<std::size_t>(config_.step_limit) * config_.instances_per_iter);
  LearnedPolicy policy(actor_, config_.epsilon);
  double work = 0.0;

  EpisodeConfig ep_config;
  ep_config.step_limit = config_.step_limit;
  ep_config.repair_time_limit = config_.repair_time_limit;
  ep_config.clock = config_.clock;
  for (int m = 0; m < config_.instances_per_iter; ++m) {
    const int idx = rng_.index(static_cast<int>(pool_.size()));
    Episode episode(pool_[idx].data, pool_[idx].initial, ep_config);
    Rng ep_rng(rng_());
    RolloutResult r = rollout(episode, policy, *backend_, ep_rng, true);
    metrics.mean_return += r.total_reward;
    metrics.mean_final_obj += r.final_solution.objective_value;
    work += r.elapsed;
    if (r.final_solution.objective_value < best_[idx].objective_value) best_[idx] = r.final_solution;
    for (Transition& t : r.transitions) buffer.push(std::move(t));
  }
  metrics.mean_return /= config_.instances_per_iter;
  metrics.mean_final_obj /= config_.instances_per_iter;

  std::vector<std::vector<const Transition*>> batches;
  if (config_.batch_override) {
    for (int u = 0; u < config_.updates; ++u) batches.push_back(buffer.sample(*config_.batch_override, rng_));
  } else {
    batches = buffer.partition(config_.updates, rng_);
  }

  for (const auto& batch : batches) {
    critic_.params().zero_grad();
    const double cl = accumulate_critic_loss(batch, critic_, config_.gamma);
    if (!std::isfinite(cl) || !critic_.params().grads_finite())
      throw TrainingError("non-finite critic loss at iteration " + std::to_string(iter_) + "; " +
                          batch_dump(batch, critic_, config_.gamma));
    critic_.params().clip_grad_norm(config_.grad_clip);
    critic_opt_.step();

    actor_.params().zero_grad();
    const double al = accumulate_actor_loss(batch, actor_, critic_, config_.epsilon, config_.q_baseline);
    if (!std::isfinite(al) || !actor_.params().grads_finite())
      throw TrainingError("non-finite actor loss at iteration " + std::to_string(iter_) + "; " +
                          batch_dump(batch, critic_, config_.gamma));
    actor_.params().clip_grad_norm(config_.grad_clip);
    actor_opt_.step();

    metrics.critic_loss += cl;
    metrics.actor_loss += al;
    for (const Transition* t : batch) work += kWorkPerUpdateNode * (t->state.n_vars() + t->state.n_cons());
  }
  metrics.critic_loss /= static_cast<double>(batches.size());
  metrics.actor_loss /= static_cast<double>(batches.size());
  metrics.wall_s = config_.clock == TimeSource::kWork
                       ? work
                       : std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

  if (config_.checkpoint_every > 0 && iter_ % config_.checkpoint_every == 0) {
    std::filesystem::create_directories(config_.checkpoint_dir);
    const std::string tag = "iter" + std::to_string(iter_);
    save(config_.checkpoint_dir / ("actor_" + tag + ".ckpt"), config_.checkpoint_dir / ("critic_" + tag + ".ckpt"));
  }
  return metrics;
}

std::vector<IterationMetrics> Trainer::train(std::ostream* metrics) {
  std::vector<IterationMetrics> out;
  if (metrics) write_metrics_header(*metrics);
  for (int j = 0; j < config_.iterations; ++j) {
    out.push_back(train_iteration());
    if (metrics) {
      write_metrics_row(*metrics, out.back());
      metrics->flush();
    }
  }
  return out;
}

void Trainer::save(const std::filesystem::path& actor_path, const std::filesystem::path& critic_path) const {
  nlohmann::json meta;
  meta["iteration"] = iter_;
  meta["feature_mode"] = to_string(pool_.front().data->mode);
  meta["seed"] = config_.seed;
  save_actor(actor_path.string(), actor_, meta.dump());
  save_critic(critic_path.string(), critic_, meta.dump());
}

double imitation_loss(const ActorNet& actor, const BipartiteState& state, std::span<const std::uint8_t> label,
                      double epsilon) {
  const std::vector<double> p = clip_probs(actor.probabilities(state), epsilon);
  return -log_prob(p, label) / static_cast<double>(label.size());
}

double imitation_step(ActorNet& actor, Adam& opt, const BipartiteState& state, std::span<const std::uint8_t> label,
                      double epsilon) {
  actor.params().zero_grad();
  Tape tape;
  Tensor loss = scale(log_prob(clip_probs(actor.forward(tape, state), epsilon), label),
                      -1.0 / static_cast<double>(label.size()));
  const double value = loss.item();
  tape.backward(loss);
  if (!std::isfinite(value) || !actor.params().grads_finite())
    throw TrainingError("non-finite imitation loss");
  opt.step();
  return value;
}

std::vector<ActionMask> best_demo(const TrainingInstance& item, const FtConfig& config, RepairBackend& backend,
                                  Rng& rng) {
  if (config.demos_per_instance <= 0) throw ConfigError("need at least one demonstration");
  EpisodeConfig ep_config;
  ep_config.step_limit = config.step_limit;
  ep_config.repair_time_limit = config.repair_time_limit;
  ep_config.clock = config.clock;
  RandomLns rlns(config.groups);
  std::vector<ActionMask> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int d = 0; d < config.demos_per_instance; ++d) {
    Episode episode(item.data, item.initial, ep_config);
    RecordingPolicy recorder(rlns);
    RolloutResult r = rollout(episode, recorder, backend, rng);
    if (r.final_solution.objective_value < best_obj) {
      best_obj = r.final_solution.objective_value;
      best = std::move(recorder.masks);
    }
  }
  return best;
}

ActorNet ft_lns_train(const FtConfig& config, const std::vector<TrainingInstance>& pool, RepairBackend& backend) {
  if (pool.empty()) throw ConfigError("training pool is empty");
  if (config.step_limit <= 0 || config.fit_steps <= 0) throw ConfigError("step limit and fit steps must be positive");
  Rng rng(derive_seed(config.seed, 11));
  ActorNet actor(pool.front().data->var_width(), derive_seed(config.seed, 12));
  Adam opt(actor.params(), AdamConfig{config.learning_rate});
  LearnedPolicy policy(actor, config.epsilon, "ftlns", false);
  EpisodeConfig ep_config;
  ep_config.repair_time_limit = config.repair_time_limit;
  ep_config.clock = config.clock;
  for (const TrainingInstance& item : pool) {
    if (item.data->var_width() != actor.var_width()) throw ConfigError("pool instances disagree on feature width");
    const std::vector<ActionMask> demo = best_demo(item, config, backend, rng);
    ep_config.step_limit = static_cast<int>(demo.size());
    Episode episode(item.data, item.initial, ep_config);
    for (const ActionMask& label : demo) {
      if (episode.done()) break;
      const BipartiteState state = episode.state();
      for (int k = 0; k < config.fit_steps; ++k) imitation_step(actor, opt, state, label, config.epsilon);
      const ActionMask action = policy.select(episode, rng);
      episode.charge_work(policy.work_cost(episode));
      episode.step(action, backend);
    }
  }
  return actor;
}

GoldenInstance golden_variable_instance(int n, std::uint64_t seed) {
  if (n < 2) throw ConfigError("golden family needs at least two variables");
  Rng rng(seed);
  GoldenInstance out;
  out.golden = rng.index(n);
  std::vector<double> cost(n);
  std::vector<double> rhs;
  std::vector<Triplet> trips;
  for (int i = 0; i < n; ++i) {
    cost[i] = static_cast<double>(rng.uniform_int(1, 10));
    if (i == out.golden) continue;
    trips.push_back({static_cast<int>(rhs.size()), i, -1.0});
    rhs.push_back(-1.0);
  }
  out.instance = std::make_shared<IpInstance>("golden_" + std::to_string(seed), cost, rhs, trips);
  return out;
}

}  // namespace lns
