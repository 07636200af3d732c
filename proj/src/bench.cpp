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

#include "lnspolicy/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "lnspolicy/errors.hpp"
#include "lnspolicy/mps.hpp"

namespace lns {
namespace {

using nlohmann::ordered_json;

template <typename T>
void take(const ordered_json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const ordered_json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "' in " + where);
}

ordered_json train_to_json(const TrainConfig& t) {
  ordered_json j;
  j["iterations"] = t.iterations;
  j["instances_per_iter"] = t.instances_per_iter;
  j["step_limit"] = t.step_limit;
  j["updates"] = t.updates;
  j["batch_size"] = t.batch_override ? ordered_json(*t.batch_override) : ordered_json(nullptr);
  j["gamma"] = t.gamma;
  j["actor_lr"] = t.actor_lr;
  j["critic_lr"] = t.critic_lr;
  j["epsilon"] = t.epsilon;
  j["repair_time_limit"] = t.repair_time_limit;
  j["grad_clip"] = t.grad_clip;
  j["q_baseline"] = t.q_baseline;
  j["seed"] = t.seed;
  j["checkpoint_every"] = t.checkpoint_every;
  return j;
}

TrainConfig train_from_json(const ordered_json& j) {
  reject_unknown(j,
                 {"iterations", "instances_per_iter", "step_limit", "updates", "batch_size", "gamma", "actor_lr",
                  "critic_lr", "epsilon", "repair_time_limit", "grad_clip", "q_baseline", "seed", "checkpoint_every"},
                 "train");
  TrainConfig t;
  take(j, "iterations", t.iterations);
  take(j, "instances_per_iter", t.instances_per_iter);
  take(j, "step_limit", t.step_limit);
  take(j, "updates", t.updates);
  if (j.contains("batch_size") && !j["batch_size"].is_null()) {
    int b = 0;
    take(j, "batch_size", b);
    t.batch_override = b;
  }
  take(j, "gamma", t.gamma);
  take(j, "actor_lr", t.actor_lr);
  take(j, "critic_lr", t.critic_lr);
  take(j, "epsilon", t.epsilon);
  take(j, "repair_time_limit", t.repair_time_limit);
  take(j, "grad_clip", t.grad_clip);
  take(j, "q_baseline", t.q_baseline);
  take(j, "seed", t.seed);
  take(j, "checkpoint_every", t.checkpoint_every);
  return t;
}

ordered_json ft_to_json(const FtConfig& f) {
  ordered_json j;
  j["demos_per_instance"] = f.demos_per_instance;
  j["step_limit"] = f.step_limit;
  j["groups"] = f.groups;
  j["fit_steps"] = f.fit_steps;
  j["learning_rate"] = f.learning_rate;
  j["epsilon"] = f.epsilon;
  j["repair_time_limit"] = f.repair_time_limit;
  j["seed"] = f.seed;
  return j;
}

FtConfig ft_from_json(const ordered_json& j) {
  reject_unknown(j,
                 {"demos_per_instance", "step_limit", "groups", "fit_steps", "learning_rate", "epsilon",
                  "repair_time_limit", "seed"},
                 "ft");
  FtConfig f;
  take(j, "demos_per_instance", f.demos_per_instance);
  take(j, "step_limit", f.step_limit);
  take(j, "groups", f.groups);
  take(j, "fit_steps", f.fit_steps);
  take(j, "learning_rate", f.learning_rate);
  take(j, "epsilon", f.epsilon);
  take(j, "repair_time_limit", f.repair_time_limit);
  take(j, "seed", f.seed);
  return f;
}

ordered_json config_json(const ExperimentConfig& c, bool with_paths) {
  ordered_json j;
  j["family"] = family_name(c.family);
  j["scale"] = c.scale;
  j["paper_size"] = c.paper_size;
  j["train_count"] = c.train_count;
  j["valid_count"] = c.valid_count;
  j["test_count"] = c.test_count;
  ordered_json methods = ordered_json::array();
  for (const MethodSpec& m : c.methods) {
    ordered_json mj;
    mj["name"] = m.name;
    mj["kind"] = m.kind;
    mj["checkpoint"] = m.checkpoint;
    mj["groups"] = m.groups;
    mj["epsilon"] = m.epsilon;
    mj["time_limit"] = m.time_limit ? ordered_json(*m.time_limit) : ordered_json(nullptr);
    methods.push_back(mj);
  }
  j["methods"] = methods;
  j["time_limit"] = c.time_limit;
  j["step_limit"] = c.step_limit ? ordered_json(*c.step_limit) : ordered_json(nullptr);
  j["repair_time_limit"] = c.repair_time_limit;
  j["init_time_limit"] = c.init_time_limit;
  j["feature_mode"] = to_string(c.feature_mode);
  j["clock"] = to_string(c.clock);
  j["backend"] = c.backend;
  j["external_command"] = c.external_command;
  j["seed"] = c.seed;
  if (with_paths) j["output_dir"] = c.output_dir.string();
  j["instance_dir"] = c.instance_dir.string();
  j["plot_interval"] = c.plot_interval;
  j["write_traces"] = c.write_traces;
  j["train"] = train_to_json(c.train);
  j["ft"] = ft_to_json(c.ft);
  return j;
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct MethodRunner {
  MethodSpec spec;
  std::unique_ptr<ActorNet> actor;
  std::unique_ptr<DestroyPolicy> policy;
};

MethodRunner make_runner(const MethodSpec& spec, int var_width) {
  MethodRunner r;
  r.spec = spec;
  if (spec.kind == "learned" || spec.kind == "ftlns") {
    if (spec.checkpoint.empty() || !std::filesystem::exists(spec.checkpoint))
      throw ConfigError("method '" + spec.name + "' needs an actor checkpoint at '" + spec.checkpoint + "'");
    r.actor = std::make_unique<ActorNet>(load_actor(spec.checkpoint));
    if (r.actor->var_width() != var_width)
      throw ConfigError("checkpoint '" + spec.checkpoint + "' expects " + std::to_string(r.actor->var_width()) +
                        " variable features, instances provide " + std::to_string(var_width));
    r.policy = std::make_unique<LearnedPolicy>(*r.actor, spec.epsilon, spec.name);
  } else if (spec.kind == "rlns") {
    r.policy = std::make_unique<RandomLns>(spec.groups);
  } else if (spec.kind == "ulns") {
    r.policy = std::make_unique<UniformLns>();
  } else {
    throw ConfigError("unknown method kind '" + spec.kind + "'");
  }
  return r;
}

struct PreparedSuite {
  std::vector<std::shared_ptr<const PreparedInstance>> data;
  std::vector<Solution> initial;
};

PreparedSuite prepare_suite(const ExperimentConfig& config,
                            const std::vector<std::shared_ptr<const IpInstance>>& instances,
                            RepairBackend& backend) {
  PreparedSuite s;
  for (const auto& inst : instances) {
    s.data.push_back(PreparedInstance::make(inst, config.feature_mode));
    s.initial.push_back(initial_solution(*inst, config.init_time_limit, backend, config.clock));
  }
  return s;
}

ResultRow run_cell(MethodRunner& runner, const PreparedSuite& suite, std::size_t k, const ExperimentConfig& config,
                   RepairBackend& backend, std::optional<double> budget, std::optional<int> step_limit) {
  EpisodeConfig ep;
  ep.step_limit = step_limit;
  ep.time_budget = budget;
  ep.repair_time_limit = config.repair_time_limit;
  ep.clock = config.clock;
  Episode episode(suite.data[k], suite.initial[k], ep);
  const std::uint64_t seed = derive_seed(config.seed, 1000 + k);
  Rng rng(seed);
  RolloutResult r = rollout(episode, *runner.policy, backend, rng);
  ResultRow row;
  row.method = runner.spec.name;
  row.instance = suite.data[k]->instance->name();
  row.seed = seed;
  row.initial_objective = r.initial_objective;
  row.objective = r.final_solution.objective_value;
  row.elapsed_s = r.elapsed;
  row.budget_s = budget.value_or(0.0);
  row.steps = episode.steps();
  row.trace = std::move(r.trace);
  return row;
}

void finalize(SuiteResult& result, const std::vector<std::string>& method_order) {
  std::map<std::string, double> best;
  for (const ResultRow& r : result.rows) {
    auto it = best.find(r.instance);
    if (it == best.end() || r.objective < it->second) best[r.instance] = r.objective;
  }
  for (ResultRow& r : result.rows) r.gap_pct = primal_gap(r.objective, best[r.instance]);
  result.summary.clear();
  for (const std::string& name : method_order) {
    MethodSummary s;
    s.method = name;
    std::vector<double> objs;
    for (const ResultRow& r : result.rows)
      if (r.method == name) {
        objs.push_back(r.objective);
        s.mean_gap_pct += r.gap_pct;
      }
    s.instances = static_cast<int>(objs.size());
    if (!objs.empty()) {
      for (double v : objs) s.mean_objective += v;
      s.mean_objective /= objs.size();
      s.mean_gap_pct /= objs.size();
      double var = 0.0;
      for (double v : objs) var += (v - s.mean_objective) * (v - s.mean_objective);
      var /= objs.size();
      s.std_pct = s.mean_objective != 0.0 ? std::sqrt(var) / std::abs(s.mean_objective) * 100.0 : 0.0;
    }
    result.summary.push_back(s);
  }
}

std::vector<std::string> method_names(const ExperimentConfig& config) {
  std::vector<std::string> names;
  for (const MethodSpec& m : config.methods) names.push_back(m.name);
  return names;
}

}  // namespace

double primal_gap(double candidate_obj, double best_obj) {
  if (candidate_obj == best_obj) return 0.0;
  if (candidate_obj == 0.0 || best_obj == 0.0) return 100.0;
  return std::abs(candidate_obj - best_obj) / std::max(std::abs(candidate_obj), std::abs(best_obj)) * 100.0;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j,
                 {"family", "scale", "paper_size", "train_count", "valid_count", "test_count", "methods",
                  "time_limit", "step_limit", "repair_time_limit", "init_time_limit", "feature_mode", "clock",
                  "backend", "external_command", "seed", "output_dir", "instance_dir", "plot_interval",
                  "write_traces", "train", "ft"},
                 "config");
  ExperimentConfig c;
  std::string family = family_name(c.family), mode = to_string(c.feature_mode), clock = to_string(c.clock);
  take(j, "family", family);
  c.family = parse_family(family);
  take(j, "scale", c.scale);
  take(j, "paper_size", c.paper_size);
  take(j, "train_count", c.train_count);
  take(j, "valid_count", c.valid_count);
  take(j, "test_count", c.test_count);
  if (j.contains("methods")) {
    if (!j["methods"].is_array()) throw ConfigError("methods must be an array");
    for (const auto& mj : j["methods"]) {
      reject_unknown(mj, {"name", "kind", "checkpoint", "groups", "epsilon", "time_limit"}, "method");
      MethodSpec m;
      take(mj, "kind", m.kind);
      m.name = m.kind;
      take(mj, "name", m.name);
      take(mj, "checkpoint", m.checkpoint);
      take(mj, "groups", m.groups);
      take(mj, "epsilon", m.epsilon);
      if (mj.contains("time_limit") && !mj["time_limit"].is_null()) {
        double tl = 0.0;
        take(mj, "time_limit", tl);
        m.time_limit = tl;
      }
      c.methods.push_back(m);
    }
  }
  take(j, "time_limit", c.time_limit);
  if (j.contains("step_limit") && !j["step_limit"].is_null()) {
    int sl = 0;
    take(j, "step_limit", sl);
    c.step_limit = sl;
  }
  take(j, "repair_time_limit", c.repair_time_limit);
  take(j, "init_time_limit", c.init_time_limit);
  take(j, "feature_mode", mode);
  c.feature_mode = parse_feature_mode(mode);
  take(j, "clock", clock);
  c.clock = parse_time_source(clock);
  take(j, "backend", c.backend);
  take(j, "external_command", c.external_command);
  take(j, "seed", c.seed);
  std::string out_dir = c.output_dir.string(), inst_dir;
  take(j, "output_dir", out_dir);
  take(j, "instance_dir", inst_dir);
  c.output_dir = out_dir;
  c.instance_dir = inst_dir;
  take(j, "plot_interval", c.plot_interval);
  take(j, "write_traces", c.write_traces);
  c.train.seed = c.seed;
  c.ft.seed = c.seed;
  if (j.contains("train")) c.train = train_from_json(j["train"]);
  if (j.contains("ft")) c.ft = ft_from_json(j["ft"]);
  c.train.clock = c.clock;
  c.ft.clock = c.clock;
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string ExperimentConfig::to_json_text() const { return config_json(*this, true).dump(2); }

std::string ExperimentConfig::hash() const { return fnv1a_hex(config_json(*this, false).dump()); }

void ExperimentConfig::validate() const {
  if (scale != 1 && scale != 2 && scale != 4) throw ConfigError("scale must be 1, 2 or 4");
  if (train_count < 0 || valid_count < 0 || test_count < 0) throw ConfigError("dataset sizes must be non-negative");
  if (!(time_limit > 0.0)) throw ConfigError("time limit must be positive");
  if (step_limit && *step_limit < 0) throw ConfigError("step limit must be non-negative");
  if (!(repair_time_limit > 0.0) || !(init_time_limit > 0.0)) throw ConfigError("repair limits must be positive");
  if (!(plot_interval > 0.0)) throw ConfigError("plot interval must be positive");
  if (backend != "internal" && backend != "external") throw ConfigError("backend must be internal or external");
  if (backend == "external" && external_command.empty()) throw ConfigError("external backend needs a command");
  std::set<std::string> names;
  for (const MethodSpec& m : methods) {
    if (m.kind != "learned" && m.kind != "ftlns" && m.kind != "rlns" && m.kind != "ulns")
      throw ConfigError("unknown method kind '" + m.kind + "'");
    if (!names.insert(m.name).second) throw ConfigError("duplicate method name '" + m.name + "'");
    if (m.time_limit && !(*m.time_limit > 0.0)) throw ConfigError("method time limits must be positive");
    if (m.kind == "rlns" && (m.groups < 2 || m.groups > 5)) throw ConfigError("R-LNS groups must lie in [2, 5]");
  }
}

const char* to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "?";
}

std::vector<std::shared_ptr<const IpInstance>> make_dataset(const ExperimentConfig& config, Split split) {
  std::vector<std::shared_ptr<const IpInstance>> out;
  if (!config.instance_dir.empty()) {
    const auto dir = config.instance_dir / to_string(split);
    if (!std::filesystem::is_directory(dir)) throw ConfigError("missing instance directory " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      if (entry.path().extension() == ".mps") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      MpsModel model = read_mps_file(f);
      out.push_back(std::make_shared<IpInstance>(std::move(model.instance)));
    }
    return out;
  }
  const int count = split == Split::kTrain ? config.train_count
                    : split == Split::kValid ? config.valid_count
                                             : config.test_count;
  const std::uint64_t split_seed = derive_seed(config.seed, 100 + static_cast<int>(split));
  for (int k = 0; k < count; ++k) {
    const std::uint64_t seed = derive_seed(split_seed, k);
    GenSpec spec = config.paper_size ? paper_preset(config.family, config.scale, seed)
                                     : desk_preset(config.family, config.scale, seed);
    IpInstance inst = generate(spec);
    const std::string name = family_name(config.family) + "_" + to_string(split) + "_" + std::to_string(k);
    out.push_back(std::make_shared<IpInstance>(name, std::vector<double>(inst.objective().begin(), inst.objective().end()),
                                               std::vector<double>(inst.rhs().begin(), inst.rhs().end()),
                                               inst.triplets()));
  }
  return out;
}

std::unique_ptr<RepairBackend> make_backend(const ExperimentConfig& config) {
  if (config.backend == "external") return std::make_unique<ExternalRepair>(ExternalRepairOptions{config.external_command});
  return std::make_unique<InternalRepair>();
}

const MethodSummary& SuiteResult::method(const std::string& name) const {
  for (const MethodSummary& s : summary)
    if (s.method == name) return s;
  throw ContractError("no summary for method '" + name + "'");
}

SuiteResult evaluate_suite(const ExperimentConfig& config,
                           const std::vector<std::shared_ptr<const IpInstance>>& instances, RepairBackend& backend,
                           const std::vector<double>& per_instance_budget) {
  config.validate();
  if (config.methods.empty()) throw ConfigError("no methods to evaluate");
  if (!per_instance_budget.empty() && per_instance_budget.size() != instances.size())
    throw DimensionError("per-instance budgets do not match the instance count");
  const PreparedSuite suite = prepare_suite(config, instances, backend);
  const int width = suite.data.empty() ? 0 : suite.data.front()->var_width();
  SuiteResult result;
  result.config_hash = config.hash();
  result.config_json = config.to_json_text();
  for (const MethodSpec& spec : config.methods) {
    MethodRunner runner = make_runner(spec, width);
    for (std::size_t k = 0; k < suite.data.size(); ++k) {
      const double budget =
          spec.time_limit ? *spec.time_limit : per_instance_budget.empty() ? config.time_limit : per_instance_budget[k];
      result.rows.push_back(run_cell(runner, suite, k, config, backend, budget, config.step_limit));
    }
  }
  finalize(result, method_names(config));
  return result;
}

SuiteResult short_horizon_eval(const ExperimentConfig& config,
                               const std::vector<std::shared_ptr<const IpInstance>>& instances,
                               RepairBackend& backend) {
  config.validate();
  auto ft = std::find_if(config.methods.begin(), config.methods.end(),
                         [](const MethodSpec& m) { return m.kind == "ftlns"; });
  if (ft == config.methods.end()) throw ConfigError("short-horizon evaluation needs an ftlns method");
  const PreparedSuite suite = prepare_suite(config, instances, backend);
  const int width = suite.data.empty() ? 0 : suite.data.front()->var_width();
  SuiteResult result;
  result.config_hash = config.hash();
  result.config_json = config.to_json_text();

  MethodRunner ft_runner = make_runner(*ft, width);
  std::vector<double> budgets;
  std::vector<ResultRow> ft_rows;
  for (std::size_t k = 0; k < suite.data.size(); ++k) {
    ResultRow row = run_cell(ft_runner, suite, k, config, backend, std::nullopt, config.ft.step_limit);
    row.budget_s = row.elapsed_s;
    budgets.push_back(std::max(row.elapsed_s, 1e-9));
    ft_rows.push_back(std::move(row));
  }
  for (const MethodSpec& spec : config.methods) {
    if (&spec == &*ft) {
      for (ResultRow& r : ft_rows) result.rows.push_back(std::move(r));
      continue;
    }
    MethodRunner runner = make_runner(spec, width);
    for (std::size_t k = 0; k < suite.data.size(); ++k)
      result.rows.push_back(run_cell(runner, suite, k, config, backend, budgets[k], std::nullopt));
  }
  finalize(result, method_names(config));
  return result;
}

void write_suite(const SuiteResult& result, const ExperimentConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "results.csv");
    csv << "config_hash,method,instance,seed,initial_objective,objective,gap_pct,elapsed_s,budget_s,steps\n";
    for (const ResultRow& r : result.rows)
      csv << result.config_hash << ',' << r.method << ',' << r.instance << ',' << r.seed << ','
          << format_double(r.initial_objective) << ',' << format_double(r.objective) << ','
          << format_double(r.gap_pct) << ',' << format_double(r.elapsed_s) << ',' << format_double(r.budget_s)
          << ',' << r.steps << '\n';
  }
  {
    ordered_json j;
    j["config_hash"] = result.config_hash;
    j["config"] = ordered_json::parse(result.config_json);
    ordered_json methods = ordered_json::array();
    for (const MethodSummary& s : result.summary)
      methods.push_back({{"method", s.method},
                         {"instances", s.instances},
                         {"mean_objective", s.mean_objective},
                         {"std_pct", s.std_pct},
                         {"mean_gap_pct", s.mean_gap_pct}});
    j["methods"] = methods;
    std::ofstream(dir / "summary.json") << j.dump(2) << '\n';
  }
  {
    std::ofstream plot(dir / "plot.csv");
    plot << "method,instance,time_s,objective\n";
    for (const ResultRow& r : result.rows) {
      const double horizon = std::max(r.budget_s, r.elapsed_s);
      std::size_t next = 0;
      double obj = r.initial_objective;
      for (int k = 0;; ++k) {
        const double t = std::min(k * config.plot_interval, horizon);
        while (next < r.trace.size() && r.trace[next].time_s <= t) obj = r.trace[next++].objective;
        plot << r.method << ',' << r.instance << ',' << format_double(t) << ',' << format_double(obj) << '\n';
        if (t >= horizon) break;
      }
    }
  }
  if (config.write_traces) {
    std::filesystem::create_directories(dir / "traces");
    for (const ResultRow& r : result.rows) {
      std::ofstream out(dir / "traces" / (r.method + "__" + r.instance + ".jsonl"));
      write_trace_jsonl(out, r.trace);
    }
  }
}

ActiveSearchResult active_search(std::shared_ptr<const IpInstance> instance, double budget, RepairBackend& backend,
                                 TrainConfig preset, FeatureMode mode, double init_time_limit) {
  if (!(budget > 0.0)) throw ConfigError("active search budget must be positive");
  std::vector<TrainingInstance> pool = prepare_pool({instance}, mode, init_time_limit, backend, preset.clock);
  ActiveSearchResult out;
  out.best = pool.front().initial;
  out.initial_objective = out.best.objective_value;
  Trainer trainer(preset, std::move(pool), backend);
  const auto wall0 = std::chrono::steady_clock::now();
  double work = 0.0;
  for (;;) {
    const IterationMetrics m = trainer.train_iteration();
    work += m.wall_s;
    const double elapsed = preset.clock == TimeSource::kWork
                               ? work
                               : std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    if (elapsed > budget) break;
    out.elapsed = elapsed;
    out.iterations = trainer.iterations_done();
    if (trainer.best_solutions().front().objective_value < out.best.objective_value)
      out.best = trainer.best_solutions().front();
    if (elapsed >= budget) break;
  }
  return out;
}

}  // namespace lns
