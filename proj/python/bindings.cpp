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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include "lnspolicy/bench.hpp"
#include "lnspolicy/errors.hpp"
#include "lnspolicy/generators.hpp"
#include "lnspolicy/lp.hpp"
#include "lnspolicy/mps.hpp"
#include "lnspolicy/repair.hpp"
#include "lnspolicy/trainer.hpp"

namespace py = pybind11;
using namespace lns;

namespace {

using InstancePtr = std::shared_ptr<IpInstance>;

InstancePtr make_instance(std::string name, std::vector<double> objective, std::vector<double> rhs,
                          const std::vector<std::tuple<int, int, double>>& entries) {
  std::vector<Triplet> trips;
  trips.reserve(entries.size());
  for (const auto& [row, col, value] : entries) trips.push_back({row, col, value});
  return std::make_shared<IpInstance>(std::move(name), std::move(objective), std::move(rhs), std::move(trips));
}

std::vector<std::tuple<int, int, double>> entries(const IpInstance& inst) {
  std::vector<std::tuple<int, int, double>> out;
  for (const Triplet& t : inst.triplets()) out.emplace_back(t.row, t.col, t.value);
  return out;
}

const char* basis_name(BasisStatus s) {
  switch (s) {
    case BasisStatus::kLower: return "lower";
    case BasisStatus::kBasic: return "basic";
    case BasisStatus::kUpper: return "upper";
  }
  return "?";
}

py::dict lp_dict(const LpSolution& lp) {
  py::dict d;
  d["status"] = to_string(lp.status);
  d["objective"] = lp.objective;
  d["primal"] = lp.primal;
  d["reduced_costs"] = lp.reduced_costs;
  d["duals"] = lp.duals;
  std::vector<std::string> basis;
  for (BasisStatus s : lp.basis_status) basis.emplace_back(basis_name(s));
  d["basis"] = basis;
  d["iterations"] = lp.iterations;
  return d;
}

py::dict subip(const InstancePtr& inst, std::vector<std::uint8_t> free_mask, Assignment warm_start,
               double time_limit, const std::string& clock) {
  SubIpRequest req;
  req.instance = inst.get();
  req.free_mask = std::move(free_mask);
  req.warm_start = Solution::of(*inst, std::move(warm_start));
  req.time_limit = time_limit;
  req.clock = parse_time_source(clock);
  SubIpResult r;
  {
    py::gil_scoped_release release;
    r = solve_subip(req);
  }
  py::dict d;
  d["status"] = to_string(r.status);
  d["objective"] = r.solution.objective_value;
  d["values"] = r.solution.values;
  d["nodes"] = r.nodes_explored;
  d["bound"] = r.bound;
  d["elapsed"] = r.elapsed;
  return d;
}

std::unique_ptr<DestroyPolicy> make_policy(const std::string& method, int groups, const ActorNet* actor) {
  if (method == "ulns") return std::make_unique<UniformLns>();
  if (method == "rlns") return std::make_unique<RandomLns>(groups);
  if (method == "learned") {
    if (!actor) throw ConfigError("method learned needs an actor");
    return std::make_unique<LearnedPolicy>(*actor);
  }
  throw ConfigError("unknown method '" + method + "' (ulns, rlns, learned)");
}

py::dict run_lns(const InstancePtr& inst, const std::string& method, std::optional<int> steps,
                 std::optional<double> time_budget, int groups, const ActorNet* actor, std::uint64_t seed,
                 const std::string& clock, double repair_time_limit, double init_time_limit) {
  EpisodeConfig config;
  config.step_limit = steps;
  config.time_budget = time_budget;
  config.clock = parse_time_source(clock);
  config.repair_time_limit = repair_time_limit;
  const FeatureMode mode = actor && actor->var_width() == static_width(FeatureMode::kCondensed) + kDynamicFeatureCount
                               ? FeatureMode::kCondensed
                               : FeatureMode::kFull;
  InternalRepair backend;
  RolloutResult r;
  {
    py::gil_scoped_release release;
    auto data = PreparedInstance::make(inst, mode);
    Solution start = initial_solution(*inst, init_time_limit, backend, config.clock);
    Episode episode(data, std::move(start), config);
    auto policy = make_policy(method, groups, actor);
    Rng rng(seed);
    r = rollout(episode, *policy, backend, rng, false);
  }
  py::list trace;
  for (const StepRecord& s : r.trace) {
    py::dict row;
    row["step"] = s.step;
    row["action_size"] = s.action_size;
    row["reward"] = s.reward;
    row["objective"] = s.objective;
    row["elapsed_ms"] = s.elapsed_ms;
    row["repair_status"] = to_string(s.repair_status);
    trace.append(row);
  }
  py::dict d;
  d["initial_objective"] = r.initial_objective;
  d["objective"] = r.final_solution.objective_value;
  d["values"] = r.final_solution.values;
  d["total_reward"] = r.total_reward;
  d["elapsed"] = r.elapsed;
  d["trace"] = trace;
  return d;
}

std::vector<double> actor_probabilities(const ActorNet& actor, const InstancePtr& inst, Assignment values) {
  const FeatureMode mode = actor.var_width() == static_width(FeatureMode::kCondensed) + kDynamicFeatureCount
                               ? FeatureMode::kCondensed
                               : FeatureMode::kFull;
  EpisodeConfig config;
  config.step_limit = 1;
  const Episode episode(PreparedInstance::make(inst, mode), Solution::of(*inst, std::move(values)), config);
  return actor.probabilities(episode.state());
}

py::list train(const std::string& config_json, const std::filesystem::path& out, std::optional<int> iterations) {
  ExperimentConfig config = ExperimentConfig::from_json_text(config_json);
  TrainConfig tc = config.train;
  if (iterations) tc.iterations = *iterations;
  std::vector<IterationMetrics> metrics;
  {
    py::gil_scoped_release release;
    auto backend = make_backend(config);
    auto pool = prepare_pool(make_dataset(config, Split::kTrain), config.feature_mode, config.init_time_limit,
                             *backend, config.clock);
    Trainer trainer(tc, std::move(pool), *backend);
    std::filesystem::create_directories(out);
    std::ofstream csv(out / "metrics.csv", std::ios::binary);
    metrics = trainer.train(&csv);
    trainer.save(out / "actor.ckpt", out / "critic.ckpt");
  }
  py::list rows;
  for (const IterationMetrics& m : metrics) {
    py::dict row;
    row["iter"] = m.iter;
    row["mean_return"] = m.mean_return;
    row["mean_final_obj"] = m.mean_final_obj;
    row["actor_loss"] = m.actor_loss;
    row["critic_loss"] = m.critic_loss;
    row["wall_s"] = m.wall_s;
    rows.append(row);
  }
  return rows;
}

py::list evaluate_config(const std::string& config_json, bool short_horizon, bool write) {
  const ExperimentConfig config = ExperimentConfig::from_json_text(config_json);
  SuiteResult r;
  {
    py::gil_scoped_release release;
    auto backend = make_backend(config);
    const auto instances = make_dataset(config, Split::kTest);
    r = short_horizon ? short_horizon_eval(config, instances, *backend) : evaluate_suite(config, instances, *backend);
    if (write) write_suite(r, config, config.output_dir);
  }
  py::list rows;
  for (const MethodSummary& s : r.summary) {
    py::dict row;
    row["method"] = s.method;
    row["instances"] = s.instances;
    row["mean_objective"] = s.mean_objective;
    row["std_pct"] = s.std_pct;
    row["mean_gap_pct"] = s.mean_gap_pct;
    rows.append(row);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_lnspolicy, m) {
  m.doc() = "Learned large neighborhood search for binary integer programs";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<GenerationError>(m, "GenerationError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<AdapterError>(m, "AdapterError", base.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", base.ptr());

  py::class_<IpInstance, InstancePtr>(m, "Instance", "Binary minimization problem min c'x s.t. Ax <= b.")
      .def(py::init(&make_instance), py::arg("name"), py::arg("objective"), py::arg("rhs"), py::arg("entries"),
           "entries are (row, col, value) triples")
      .def_property_readonly("name", &IpInstance::name)
      .def_property_readonly("n_vars", &IpInstance::n_vars)
      .def_property_readonly("n_cons", &IpInstance::n_cons)
      .def_property_readonly("nnz", &IpInstance::nnz)
      .def_property_readonly("objective",
                             [](const IpInstance& i) { return std::vector<double>(i.objective().begin(), i.objective().end()); })
      .def_property_readonly("rhs", [](const IpInstance& i) { return std::vector<double>(i.rhs().begin(), i.rhs().end()); })
      .def("entries", &entries)
      .def("evaluate", [](const IpInstance& i, const Assignment& x) { return lns::evaluate(i, x); })
      .def("is_feasible", [](const IpInstance& i, const Assignment& x) { return is_feasible(i, x); })
      .def("to_mps", [](const IpInstance& i) { return to_mps(i); })
      .def_static("from_mps", [](const std::string& text) {
        return std::make_shared<IpInstance>(read_mps_string(text).instance);
      })
      .def("__repr__", [](const IpInstance& i) {
        std::ostringstream s;
        s << "<Instance " << i.name() << ": " << i.n_vars() << " vars, " << i.n_cons() << " cons>";
        return s.str();
      });

  m.def(
      "generate",
      [](const std::string& family, int scale, std::uint64_t seed, bool paper) {
        const Family f = parse_family(family);
        return std::make_shared<IpInstance>(generate(paper ? paper_preset(f, scale, seed)
                                                                 : desk_preset(f, scale, seed)));
      },
      py::arg("family"), py::arg("scale") = 1, py::arg("seed") = 0, py::arg("paper") = false,
      "Instance of family sc/mis/ca/mc at desk (default) or paper size.");
  m.def(
      "generate_sc",
      [](int rows, int cols, double density, std::uint64_t seed) {
        return std::make_shared<IpInstance>(generate_sc(rows, cols, density, seed));
      },
      py::arg("rows"), py::arg("cols"), py::arg("density"), py::arg("seed") = 0);
  m.def(
      "generate_mis",
      [](int nodes, int affinity, std::uint64_t seed) {
        return std::make_shared<IpInstance>(generate_mis(nodes, affinity, seed));
      },
      py::arg("nodes"), py::arg("affinity"), py::arg("seed") = 0);
  m.def(
      "generate_ca",
      [](int items, int bids, std::uint64_t seed) {
        return std::make_shared<IpInstance>(generate_ca(items, bids, seed));
      },
      py::arg("items"), py::arg("bids"), py::arg("seed") = 0);
  m.def(
      "generate_mc",
      [](int nodes, int attachment, std::uint64_t seed) {
        return std::make_shared<IpInstance>(generate_mc(nodes, attachment, seed));
      },
      py::arg("nodes"), py::arg("attachment"), py::arg("seed") = 0);

  m.def("solve_lp", [](const InstancePtr& inst) { return lp_dict(solve_lp(*inst)); }, py::arg("instance"),
        "LP relaxation with 0 <= x <= 1.");
  m.def("solve_subip", &subip, py::arg("instance"), py::arg("free_mask"), py::arg("warm_start"),
        py::arg("time_limit") = std::numeric_limits<double>::infinity(), py::arg("clock") = "wall",
        "Re-optimizes the free variables with the rest fixed at the warm start.");
  m.def(
      "initial_solution",
      [](const InstancePtr& inst, double budget, const std::string& clock) {
        InternalRepair backend;
        return initial_solution(*inst, budget, backend, parse_time_source(clock)).values;
      },
      py::arg("instance"), py::arg("budget") = kDefaultRepairTimeLimit, py::arg("clock") = "wall");

  m.def(
      "clip_probs", [](const std::vector<double>& p, double epsilon) { return clip_probs(p, epsilon); }, py::arg("p"),
      py::arg("epsilon") = kDefaultClip);
  m.def(
      "log_prob", [](const std::vector<double>& p, const ActionMask& mask) { return log_prob(p, mask); },
      py::arg("p"), py::arg("mask"));
  m.def(
      "sample_action",
      [](const std::vector<double>& p, std::uint64_t seed) {
        Rng rng(seed);
        return sample_action(p, rng).mask;
      },
      py::arg("p"), py::arg("seed") = 0, "Bernoulli draw per variable, redrawn until non-empty and non-universal.");
  m.def("primal_gap", &primal_gap, py::arg("candidate"), py::arg("best"));

  m.def(
      "var_feature_width",
      [](const std::string& mode) { return static_width(parse_feature_mode(mode)) + kDynamicFeatureCount; },
      py::arg("mode") = "full", "Per-variable input width an Actor needs for the given feature mode.");

  py::class_<ActorNet>(m, "Actor", "Destroy-policy network.")
      .def(py::init<int, std::uint64_t>(), py::arg("var_width"), py::arg("seed") = 0)
      .def_property_readonly("var_width", &ActorNet::var_width)
      .def_static("load", &load_actor, py::arg("path"))
      .def("save", [](const ActorNet& a, const std::string& path) { save_actor(path, a); }, py::arg("path"))
      .def("probabilities", &actor_probabilities, py::arg("instance"), py::arg("values"),
           "Selection probability per variable at the given current solution.");

  m.def("run_lns", &run_lns, py::arg("instance"), py::arg("method") = "rlns", py::arg("steps") = py::none(),
        py::arg("time_budget") = py::none(), py::arg("groups") = 2, py::arg("actor") = nullptr,
        py::arg("seed") = 0, py::arg("clock") = "work", py::arg("repair_time_limit") = kDefaultRepairTimeLimit,
        py::arg("init_time_limit") = kDefaultRepairTimeLimit,
        "One LNS episode from the initial solution; needs steps or time_budget.");
  m.def("train", &train, py::arg("config_json"), py::arg("out_dir"), py::arg("iterations") = py::none(),
        "Trains on the config's training split; writes metrics.csv and checkpoints to out_dir.");
  m.def("evaluate", &evaluate_config, py::arg("config_json"), py::arg("short_horizon") = false, py::arg("write") = false,
        "Runs the configured methods on the test split and returns the per-method summary.");
}
