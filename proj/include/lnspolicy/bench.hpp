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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lnspolicy/generators.hpp"
#include "lnspolicy/trainer.hpp"

namespace lns {

// |candidate - best| / max(|candidate|, |best|) * 100. Equal values give 0;
// exactly one zero gives 100.
double primal_gap(double candidate_obj, double best_obj);

struct MethodSpec {
  std::string name;                  // row label
  std::string kind;                  // learned | ftlns | rlns | ulns
  std::string checkpoint;            // actor checkpoint for learned / ftlns
  int groups = 2;                    // rlns
  double epsilon = kDefaultClip;     // learned / ftlns
  std::optional<double> time_limit;  // overrides the suite time limit
};

struct ExperimentConfig {
  Family family = Family::kSetCover;
  int scale = 1;
  bool paper_size = false;  // Table-1 sizes instead of desk sizes
  int train_count = 100;
  int valid_count = 20;
  int test_count = 50;
  std::vector<MethodSpec> methods;
  double time_limit = 30.0;  // per method and instance
  std::optional<int> step_limit;  // caps evaluation episodes when set
  double repair_time_limit = kDefaultRepairTimeLimit;
  double init_time_limit = kDefaultRepairTimeLimit;
  FeatureMode feature_mode = FeatureMode::kFull;
  TimeSource clock = TimeSource::kWall;
  std::string backend = "internal";  // internal | external
  std::string external_command;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "results";
  std::filesystem::path instance_dir;  // MPS files; generated when empty
  double plot_interval = 1.0;          // seconds between plot samples
  bool write_traces = false;
  TrainConfig train;
  FtConfig ft;

  // Throws ConfigError on unknown keys' values or violated invariants.
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  std::string to_json_text() const;
  // FNV-1a over the canonical JSON.
  std::string hash() const;
  void validate() const;
};

enum class Split { kTrain, kValid, kTest };
const char* to_string(Split split);

// Seeded generation of the split, or the sorted MPS files of instance_dir.
std::vector<std::shared_ptr<const IpInstance>> make_dataset(const ExperimentConfig& config, Split split);

std::unique_ptr<RepairBackend> make_backend(const ExperimentConfig& config);

struct ResultRow {
  std::string method;
  std::string instance;
  std::uint64_t seed = 0;
  double initial_objective = 0.0;
  double objective = 0.0;
  double gap_pct = 0.0;
  double elapsed_s = 0.0;
  double budget_s = 0.0;
  int steps = 0;
  std::vector<StepRecord> trace;
};

struct MethodSummary {
  std::string method;
  int instances = 0;
  double mean_objective = 0.0;
  double std_pct = 0.0;  // population std / |mean| * 100
  double mean_gap_pct = 0.0;
};

struct SuiteResult {
  std::string config_hash;
  std::string config_json;
  std::vector<ResultRow> rows;  // method-major
  std::vector<MethodSummary> summary;
  const MethodSummary& method(const std::string& name) const;
};

// Per-instance budgets override the configured time limit (method-specific
// limits still win).
SuiteResult evaluate_suite(const ExperimentConfig& config,
                           const std::vector<std::shared_ptr<const IpInstance>>& instances, RepairBackend& backend,
                           const std::vector<double>& per_instance_budget = {});

// FT-LNS (the first method of kind ftlns) runs for its training step count;
// every other method then gets the FT-LNS elapsed time on that instance.
SuiteResult short_horizon_eval(const ExperimentConfig& config,
                               const std::vector<std::shared_ptr<const IpInstance>>& instances,
                               RepairBackend& backend);

// results.csv, summary.json, plot.csv and optionally traces/*.jsonl.
void write_suite(const SuiteResult& result, const ExperimentConfig& config, const std::filesystem::path& dir);

struct ActiveSearchResult {
  Solution best;
  double initial_objective = 0.0;
  int iterations = 0;
  double elapsed = 0.0;
};

// Trains on copies of one instance with the active-search preset until the
// budget is spent. An iteration that finishes past the budget does not count.
ActiveSearchResult active_search(std::shared_ptr<const IpInstance> instance, double budget, RepairBackend& backend,
                                 TrainConfig preset = active_search_config(),
                                 FeatureMode mode = FeatureMode::kFull, double init_time_limit = 2.0);

}  // namespace lns
