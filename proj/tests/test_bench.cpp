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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "lnspolicy/bench.hpp"
#include "lnspolicy/errors.hpp"
#include "lnspolicy/generators.hpp"
#include "lnspolicy/mps.hpp"
#include "oracles.hpp"

using namespace lns;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("lnspolicy_bench_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<std::shared_ptr<const IpInstance>> small_suite(int count, std::uint64_t seed) {
  std::vector<std::shared_ptr<const IpInstance>> out;
  for (int k = 0; k < count; ++k) {
    IpInstance g = generate_sc(150, 40, 0.08, derive_seed(seed, k));
    out.push_back(std::make_shared<const IpInstance>("sc_" + std::to_string(k),
                                                     std::vector<double>(g.objective().begin(), g.objective().end()),
                                                     std::vector<double>(g.rhs().begin(), g.rhs().end()),
                                                     g.triplets()));
  }
  return out;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.time_limit = 2.0;
  c.repair_time_limit = 0.3;
  c.init_time_limit = 0.01;
  c.clock = TimeSource::kWork;
  c.seed = 4;
  return c;
}

MethodSpec method(const std::string& name, const std::string& kind, int groups = 2) {
  MethodSpec m;
  m.name = name;
  m.kind = kind;
  m.groups = groups;
  return m;
}

}  // namespace

TEST_CASE("primal gap arithmetic") {
  CHECK(primal_gap(100.0, 100.0) == 0.0);
  CHECK(primal_gap(110.0, 100.0) == doctest::Approx(10.0 / 110.0 * 100.0).epsilon(1e-14));
  CHECK(primal_gap(-110.0, -100.0) == primal_gap(110.0, 100.0));
  CHECK(primal_gap(0.0, 0.0) == 0.0);
  CHECK(primal_gap(0.0, -5.0) == 100.0);
  CHECK(primal_gap(5.0, 0.0) == 100.0);
  CHECK(primal_gap(-12.0, -20.0) == doctest::Approx(40.0));
}

TEST_CASE("config defaults and JSON round trip") {
  ExperimentConfig d;
  CHECK(d.train_count == 100);
  CHECK(d.valid_count == 20);
  CHECK(d.test_count == 50);
  CHECK(d.repair_time_limit == 2.0);

  const std::string text = R"({"family":"mis","scale":2,"test_count":3,"time_limit":5,"seed":9,
    "methods":[{"kind":"rlns","groups":3},{"name":"u","kind":"ulns","time_limit":1.5}],
    "train":{"iterations":7,"batch_size":32},"ft":{"step_limit":12},"clock":"work"})";
  const ExperimentConfig c = ExperimentConfig::from_json_text(text);
  CHECK(c.family == Family::kIndependentSet);
  CHECK(c.scale == 2);
  CHECK(c.methods.size() == 2);
  CHECK(c.methods[0].name == "rlns");
  CHECK(c.methods[0].groups == 3);
  CHECK(c.methods[1].time_limit == 1.5);
  CHECK(c.train.iterations == 7);
  CHECK(c.train.batch_override == 32);
  CHECK(c.train.clock == TimeSource::kWork);
  CHECK(c.ft.step_limit == 12);
  CHECK(c.ft.seed == 0);  // an explicit ft block keeps its own seed default
  const ExperimentConfig again = ExperimentConfig::from_json_text(c.to_json_text());
  CHECK(again.to_json_text() == c.to_json_text());
  CHECK(again.hash() == c.hash());

  ExperimentConfig moved = c;
  moved.output_dir = "/elsewhere";
  CHECK(moved.hash() == c.hash());
  moved.seed = 10;
  CHECK(moved.hash() != c.hash());
  CHECK(c.hash().size() == 16);

  const ExperimentConfig seeded = ExperimentConfig::from_json_text(R"({"seed":5})");
  CHECK(seeded.train.seed == 5);
  CHECK(seeded.ft.seed == 5);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"famly":"sc"})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"train":{"iters":3}})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"time_limit":0})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"methods":[{"kind":"xlns"}]})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"methods":[{"kind":"ulns"},{"kind":"ulns"}]})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"methods":[{"kind":"rlns","groups":9}]})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"backend":"external"})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"scale":3})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text("{"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json_text(R"({"time_limit":"long"})"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_file("/no/such/config.json"), ConfigError);
}

TEST_CASE("generated datasets are named and reproducible") {
  ExperimentConfig c;
  c.family = Family::kMaxCut;
  c.test_count = 3;
  c.valid_count = 2;
  const auto a = make_dataset(c, Split::kTest);
  const auto b = make_dataset(c, Split::kTest);
  const auto v = make_dataset(c, Split::kValid);
  REQUIRE(a.size() == 3);
  CHECK(v.size() == 2);
  CHECK(a[2]->name() == "mc_test_2");
  CHECK(v[0]->name() == "mc_valid_0");
  CHECK(oracle::dense(*a[1]).a == oracle::dense(*b[1]).a);
  CHECK(a[0]->n_vars() == 575);
}

TEST_CASE("datasets load from an instance directory in sorted order") {
  const auto dir = scratch("dataset");
  std::filesystem::create_directories(dir / "test");
  for (int k : {2, 0, 1}) write_mps_file(dir / "test" / ("i" + std::to_string(k) + ".mps"), generate_sc(20, 8, 0.4, k));
  std::ofstream(dir / "test" / "notes.txt") << "ignored";
  ExperimentConfig c;
  c.instance_dir = dir;
  const auto loaded = make_dataset(c, Split::kTest);
  REQUIRE(loaded.size() == 3);
  for (int k = 0; k < 3; ++k)
    CHECK(oracle::dense(*loaded[k]).c == oracle::dense(generate_sc(20, 8, 0.4, k)).c);
  CHECK_THROWS_AS(make_dataset(c, Split::kTrain), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("two identical methods give identical rows and zero gaps") {
  ExperimentConfig c = small_config();
  c.methods = {method("a", "rlns", 3), method("b", "rlns", 3)};
  InternalRepair backend;
  const auto suite = small_suite(3, 1);
  const SuiteResult r = evaluate_suite(c, suite, backend);
  REQUIRE(r.rows.size() == 6);
  for (int k = 0; k < 3; ++k) {
    CHECK(r.rows[k].objective == r.rows[3 + k].objective);
    CHECK(r.rows[k].seed == r.rows[3 + k].seed);
    CHECK(r.rows[k].gap_pct == 0.0);
    CHECK(r.rows[3 + k].gap_pct == 0.0);
  }
  CHECK(r.method("a").mean_gap_pct == 0.0);
  CHECK(r.method("a").mean_objective == r.method("b").mean_objective);
  CHECK_THROWS_AS(r.method("zzz"), ContractError);
}

TEST_CASE("gaps are measured against the per-instance best") {
  ExperimentConfig c = small_config();
  c.methods = {method("rlns2", "rlns", 2), method("rlns4", "rlns", 4), method("ulns", "ulns")};
  InternalRepair backend;
  const auto suite = small_suite(3, 2);
  const SuiteResult r = evaluate_suite(c, suite, backend);
  std::map<std::string, double> best;
  for (const ResultRow& row : r.rows)
    best[row.instance] = best.contains(row.instance) ? std::min(best[row.instance], row.objective) : row.objective;
  std::map<std::string, int> zero_gaps;
  for (const ResultRow& row : r.rows) {
    const double expected = std::abs(row.objective - best[row.instance]) /
                            std::max(std::abs(row.objective), std::abs(best[row.instance])) * 100.0;
    CHECK(row.gap_pct == doctest::Approx(expected).epsilon(1e-12));
    if (row.gap_pct == 0.0) ++zero_gaps[row.instance];
    CHECK(row.objective <= row.initial_objective);
    CHECK(row.elapsed_s <= row.budget_s + c.repair_time_limit + 1e-9);
  }
  for (const auto& [inst, count] : zero_gaps) CHECK(count >= 1);
  CHECK(zero_gaps.size() == 3);
  for (const MethodSummary& s : r.summary) {
    std::vector<double> objs;
    for (const ResultRow& row : r.rows)
      if (row.method == s.method) objs.push_back(row.objective);
    double mean = 0.0;
    for (double v : objs) mean += v;
    mean /= objs.size();
    double var = 0.0;
    for (double v : objs) var += (v - mean) * (v - mean);
    CHECK(s.mean_objective == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.std_pct == doctest::Approx(std::sqrt(var / objs.size()) / std::abs(mean) * 100.0).epsilon(1e-9));
  }
}

TEST_CASE("suite rows reproduce bit for bit under the work clock") {
  ExperimentConfig c = small_config();
  c.methods = {method("ulns", "ulns")};
  InternalRepair backend;
  const auto suite = small_suite(2, 3);
  const SuiteResult a = evaluate_suite(c, suite, backend);
  const SuiteResult b = evaluate_suite(c, suite, backend);
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    CHECK(a.rows[k].objective == b.rows[k].objective);
    CHECK(a.rows[k].steps == b.rows[k].steps);
  }
  CHECK(a.config_hash == c.hash());
}

TEST_CASE("learned methods need a checkpoint") {
  ExperimentConfig c = small_config();
  MethodSpec m = method("learned", "learned");
  m.checkpoint = "/no/such/actor.ckpt";
  c.methods = {m};
  InternalRepair backend;
  try {
    evaluate_suite(c, small_suite(1, 4), backend);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("/no/such/actor.ckpt") != std::string::npos);
  }
}

TEST_CASE("checkpoint width must match the feature mode") {
  const auto dir = scratch("width");
  save_actor((dir / "a.ckpt").string(), ActorNet(4, 1));
  ExperimentConfig c = small_config();
  MethodSpec m = method("learned", "learned");
  m.checkpoint = (dir / "a.ckpt").string();
  c.methods = {m};
  InternalRepair backend;
  CHECK_THROWS_AS(evaluate_suite(c, small_suite(1, 5), backend), ConfigError);
  c.feature_mode = FeatureMode::kCondensed;
  CHECK(evaluate_suite(c, small_suite(1, 5), backend).rows.size() == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("short-horizon protocol gives every method the FT-LNS time") {
  const auto dir = scratch("short");
  save_actor((dir / "ft.ckpt").string(), ActorNet(13, 2));
  ExperimentConfig c = small_config();
  MethodSpec ft = method("ftlns", "ftlns");
  ft.checkpoint = (dir / "ft.ckpt").string();
  c.methods = {method("rlns", "rlns", 2), ft, method("ulns", "ulns")};
  c.ft.step_limit = 5;
  InternalRepair backend;
  const auto suite = small_suite(3, 6);
  const SuiteResult r = short_horizon_eval(c, suite, backend);
  REQUIRE(r.rows.size() == 9);
  std::map<std::string, double> ft_time;
  for (const ResultRow& row : r.rows)
    if (row.method == "ftlns") {
      CHECK(row.steps == 5);
      ft_time[row.instance] = row.elapsed_s;
    }
  for (const ResultRow& row : r.rows) {
    if (row.method == "ftlns") continue;
    CHECK(row.budget_s == doctest::Approx(std::max(ft_time[row.instance], 1e-9)));
    CHECK(row.elapsed_s <= ft_time[row.instance] + c.repair_time_limit + 1e-9);
  }
  CHECK(r.rows[0].method == "rlns");
  CHECK(r.rows[3].method == "ftlns");
  c.methods = {method("rlns", "rlns", 2)};
  CHECK_THROWS_AS(short_horizon_eval(c, suite, backend), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("suite files") {
  ExperimentConfig c = small_config();
  c.methods = {method("ulns", "ulns")};
  c.write_traces = true;
  c.plot_interval = 0.5;
  InternalRepair backend;
  const SuiteResult r = evaluate_suite(c, small_suite(2, 7), backend);
  const auto dir = scratch("files");
  write_suite(r, c, dir);
  for (const char* f : {"results.csv", "summary.json", "plot.csv"}) CHECK(std::filesystem::exists(dir / f));
  CHECK(std::filesystem::exists(dir / "traces" / "ulns__sc_0.jsonl"));

  std::ifstream csv(dir / "results.csv");
  std::string header, line;
  std::getline(csv, header);
  CHECK(header == "config_hash,method,instance,seed,initial_objective,objective,gap_pct,elapsed_s,budget_s,steps");
  int rows = 0;
  while (std::getline(csv, line)) {
    CHECK(line.rfind(c.hash() + ",ulns,", 0) == 0);
    ++rows;
  }
  CHECK(rows == 2);

  const auto summary = nlohmann::json::parse(std::ifstream(dir / "summary.json"));
  CHECK(summary["config_hash"] == c.hash());
  CHECK(summary["config"]["seed"] == 4);
  CHECK(summary["methods"][0]["method"] == "ulns");

  std::ifstream plot(dir / "plot.csv");
  std::getline(plot, header);
  CHECK(header == "method,instance,time_s,objective");
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  while (std::getline(plot, line)) {
    std::stringstream ss(line);
    std::string m, inst, t, o;
    std::getline(ss, m, ',');
    std::getline(ss, inst, ',');
    std::getline(ss, t, ',');
    std::getline(ss, o, ',');
    series[inst].push_back({std::stod(t), std::stod(o)});
  }
  for (const ResultRow& row : r.rows) {
    const auto& s = series[row.instance];
    REQUIRE(!s.empty());
    CHECK(s.front().first == 0.0);
    CHECK(s.front().second == row.initial_objective);
    CHECK(s.back().second == row.objective);
    for (std::size_t k = 1; k < s.size(); ++k) {
      CHECK(s[k].first > s[k - 1].first);
      CHECK(s[k].second <= s[k - 1].second);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("active search") {
  InternalRepair backend;
  IpInstance g = generate_sc(150, 30, 0.08, 11);
  auto inst = std::make_shared<const IpInstance>(g);
  TrainConfig preset = active_search_config();
  preset.clock = TimeSource::kWork;
  preset.repair_time_limit = 0.5;
  preset.seed = 2;

  const ActiveSearchResult tiny = active_search(inst, 1e-6, backend, preset, FeatureMode::kFull, 1e-4);
  CHECK(tiny.iterations == 0);
  CHECK(tiny.best.objective_value == tiny.initial_objective);

  const ActiveSearchResult full = active_search(inst, 60.0, backend, preset, FeatureMode::kFull, 1e-4);
  CHECK(full.best.objective_value <= full.initial_objective);
  CHECK(full.elapsed <= 60.0);
  CHECK(is_feasible(*inst, full.best.values));
  const auto exact = oracle::enumerate_pruned(oracle::dense(g));
  MESSAGE("active search " << full.best.objective_value << " after " << full.iterations << " iterations, optimum "
                           << exact.objective << ", start " << full.initial_objective);
  CHECK(full.best.objective_value == exact.objective);
  CHECK_THROWS_AS(active_search(inst, 0.0, backend, preset), ConfigError);
}
