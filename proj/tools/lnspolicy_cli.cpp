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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lnspolicy/bench.hpp"
#include "lnspolicy/errors.hpp"
#include "lnspolicy/mps.hpp"

namespace fs = std::filesystem;
using namespace lns;

namespace {

void print_summary(const SuiteResult& r) {
  std::cout << "config " << r.config_hash << '\n';
  for (const MethodSummary& s : r.summary)
    std::cout << s.method << "  obj " << format_double(s.mean_objective) << "  std% " << format_double(s.std_pct)
              << "  gap% " << format_double(s.mean_gap_pct) << "  n " << s.instances << '\n';
}

int cmd_gen(const ExperimentConfig& config, const fs::path& out) {
  nlohmann::ordered_json manifest;
  manifest["config_hash"] = config.hash();
  manifest["family"] = family_name(config.family);
  manifest["scale"] = config.scale;
  manifest["paper_size"] = config.paper_size;
  for (Split split : {Split::kTrain, Split::kValid, Split::kTest}) {
    const fs::path dir = out / to_string(split);
    fs::create_directories(dir);
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& inst : make_dataset(config, split)) {
      write_mps_file(dir / (inst->name() + ".mps"), *inst);
      list.push_back({{"name", inst->name()}, {"n_vars", inst->n_vars()}, {"n_cons", inst->n_cons()},
                      {"nnz", inst->nnz()}});
    }
    manifest[to_string(split)] = list;
  }
  std::ofstream(out / "manifest.json") << manifest.dump(2) << '\n';
  std::cout << "wrote dataset to " << out.string() << '\n';
  return 0;
}

int cmd_train(ExperimentConfig config, const std::string& method, const fs::path& out,
              std::optional<int> iterations) {
  fs::create_directories(out);
  auto backend = make_backend(config);
  const auto instances = make_dataset(config, Split::kTrain);
  if (instances.empty()) throw ConfigError("training split is empty");
  auto pool = prepare_pool(instances, config.feature_mode, config.init_time_limit, *backend, config.clock);
  if (method == "ftlns") {
    ActorNet actor = ft_lns_train(config.ft, pool, *backend);
    nlohmann::json meta;
    meta["feature_mode"] = to_string(config.feature_mode);
    meta["step_limit"] = config.ft.step_limit;
    meta["config_hash"] = config.hash();
    save_actor((out / "ftlns_actor.ckpt").string(), actor, meta.dump());
    std::cout << "saved " << (out / "ftlns_actor.ckpt").string() << '\n';
    return 0;
  }
  if (method != "learned") throw ConfigError("train --method must be learned or ftlns");
  TrainConfig tc = config.train;
  if (iterations) tc.iterations = *iterations;
  if (tc.checkpoint_every > 0) tc.checkpoint_dir = out / "checkpoints";
  Trainer trainer(tc, std::move(pool), *backend);
  std::ofstream metrics(out / "metrics.csv", std::ios::binary);
  trainer.train(&metrics);
  trainer.save(out / "actor.ckpt", out / "critic.ckpt");
  std::cout << "trained " << trainer.iterations_done() << " iterations; checkpoints in " << out.string() << '\n';
  return 0;
}

int cmd_eval(const ExperimentConfig& config, bool short_horizon, std::optional<fs::path> out) {
  auto backend = make_backend(config);
  const auto instances = make_dataset(config, Split::kTest);
  SuiteResult r = short_horizon ? short_horizon_eval(config, instances, *backend)
                                : evaluate_suite(config, instances, *backend);
  write_suite(r, config, out.value_or(config.output_dir));
  print_summary(r);
  return 0;
}

int cmd_active_search(const fs::path& mps, double budget, const std::string& clock, const fs::path& sol) {
  MpsModel model = read_mps_file(mps);
  auto instance = std::make_shared<const IpInstance>(std::move(model.instance));
  InternalRepair backend;
  TrainConfig preset = active_search_config();
  preset.clock = parse_time_source(clock);
  ActiveSearchResult r = active_search(instance, budget, backend, preset);
  std::cout << "initial " << format_double(r.initial_objective) << "  best " << format_double(r.best.objective_value)
            << "  iterations " << r.iterations << '\n';
  if (!sol.empty()) write_solution_file(sol, *instance, r.best);
  return 0;
}

int cmd_export(const std::string& family, int scale, std::uint64_t seed, bool paper, const fs::path& out) {
  const Family f = parse_family(family);
  IpInstance inst = generate(paper ? paper_preset(f, scale, seed) : desk_preset(f, scale, seed));
  write_mps_file(out, inst);
  std::cout << inst.name() << ": " << inst.n_vars() << " vars, " << inst.n_cons() << " cons -> " << out.string()
            << '\n';
  return 0;
}

int cmd_solve(const fs::path& mps, const fs::path& sol, double time_limit) {
  MpsModel model = read_mps_file(mps);
  const IpInstance& inst = model.instance;
  const int n = inst.n_vars();
  SubIpRequest request;
  request.instance = &inst;
  request.free_mask.assign(n, 1);
  std::optional<Solution> start;
  for (std::uint8_t fill : {std::uint8_t{0}, std::uint8_t{1}}) {
    Assignment x(n, fill);
    for (int i = 0; i < n; ++i)
      if (!model.fixings.empty() && model.fixings[i] >= 0) {
        x[i] = static_cast<std::uint8_t>(model.fixings[i]);
        request.free_mask[i] = 0;
      }
    if (is_feasible(inst, x)) {
      start = Solution::of(inst, std::move(x));
      break;
    }
  }
  if (!start) throw ContractError("no feasible starting point with free variables all 0 or all 1");
  request.warm_start = *start;
  request.time_limit = time_limit;
  SubIpResult r = solve_subip(request);
  write_solution_file(sol, inst, r.solution, r.status == SubIpStatus::kOptimal ? "optimal" : "");
  std::cout << "objective " << format_double(r.solution.objective_value) << "  status " << to_string(r.status)
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned large neighborhood search for binary integer programs"};
  app.require_subcommand(1);

  std::string config_path;
  fs::path out;

  auto* gen = app.add_subcommand("gen", "Generate train/valid/test instances as MPS plus a manifest");
  gen->add_option("--config", config_path, "Experiment config (JSON)")->required();
  gen->add_option("--out", out, "Output directory")->required();

  std::string method = "learned";
  std::optional<int> iterations;
  auto* train = app.add_subcommand("train", "Train the actor-critic policy or the FT-LNS imitation policy");
  train->add_option("--config", config_path, "Experiment config (JSON)")->required();
  train->add_option("--out", out, "Directory for checkpoints and metrics.csv")->required();
  train->add_option("--method", method, "learned or ftlns")->check(CLI::IsMember({"learned", "ftlns"}));
  train->add_option("--iterations", iterations, "Override the configured iteration count");

  std::optional<fs::path> eval_out;
  auto* eval = app.add_subcommand("eval", "Evaluate methods on the test split under a time budget");
  eval->add_option("--config", config_path, "Experiment config (JSON)")->required();
  eval->add_option("--out", eval_out, "Results directory (defaults to output_dir)");
  auto* short_eval = app.add_subcommand("short-eval", "FT-LNS step horizon, other methods matched on time");
  short_eval->add_option("--config", config_path, "Experiment config (JSON)")->required();
  short_eval->add_option("--out", eval_out, "Results directory (defaults to output_dir)");

  fs::path mps, sol;
  double budget = 60.0;
  std::string clock = "wall";
  auto* active = app.add_subcommand("active-search", "Train on a single MPS instance and report the best solution");
  active->add_option("--instance", mps, "MPS file")->required()->check(CLI::ExistingFile);
  active->add_option("--budget", budget, "Seconds")->required();
  active->add_option("--clock", clock, "wall or work")->check(CLI::IsMember({"wall", "work"}));
  active->add_option("--solution", sol, "Write the best solution here");

  std::string family = "sc";
  int scale = 1;
  std::uint64_t seed = 0;
  bool paper = false;
  auto* exp = app.add_subcommand("export-mps", "Write one generated instance as MPS");
  exp->add_option("--family", family, "sc, mis, ca or mc")->required();
  exp->add_option("--scale", scale, "1, 2 or 4");
  exp->add_option("--seed", seed, "Generator seed");
  exp->add_flag("--paper-size", paper, "Use the full benchmark sizes");
  exp->add_option("--out", out, "MPS path")->required();

  double time_limit = 1e9;
  auto* solve = app.add_subcommand("solve-mps", "Solve an MPS file with the internal branch and bound");
  solve->add_option("--mps", mps, "Problem file")->required()->check(CLI::ExistingFile);
  solve->add_option("--sol", sol, "Solution file to write")->required();
  solve->add_option("--time-limit", time_limit, "Seconds");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_gen(ExperimentConfig::from_file(config_path), out);
    if (*train) return cmd_train(ExperimentConfig::from_file(config_path), method, out, iterations);
    if (*eval) return cmd_eval(ExperimentConfig::from_file(config_path), false, eval_out);
    if (*short_eval) return cmd_eval(ExperimentConfig::from_file(config_path), true, eval_out);
    if (*active) return cmd_active_search(mps, budget, clock, sol);
    if (*exp) return cmd_export(family, scale, seed, paper, out);
    if (*solve) return cmd_solve(mps, sol, time_limit);
  } catch (const AdapterError& e) {
    std::cerr << "error: " << e.what() << "\nsolver output:\n" << e.raw_output() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
