// Copyright 2026 The mallsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Scenario configuration files and the end-to-end run they describe:
// ingest, sample, simulate, report.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mallsim/ingest.hpp"
#include "mallsim/malleability.hpp"
#include "mallsim/metrics.hpp"
#include "mallsim/sampler.hpp"
#include "mallsim/simulator.hpp"
#include "mallsim/submitter.hpp"

namespace mallsim::scenario {

/// Invalid or inconsistent configuration (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sampling could not reach its band (exit code 3).
struct SamplingError : std::runtime_error {
  SamplingError(sampling::SamplingSpec spec, sampling::SamplingFailed failure);
  sampling::SamplingSpec spec;
  sampling::SamplingFailed failure;
};

struct SamplingConf {
  std::optional<double> target_daily_load;
  /// Target as a fraction of the cluster's daily node-hour capacity.
  std::optional<double> target_fraction;
  sampling::LoadStatistic statistic = sampling::LoadStatistic::mean;
  double band_low = 0.95;
  double band_high = 1.05;
};

struct WorkloadConf {
  /// Absent when the scenario has no baseline workload.
  std::optional<std::filesystem::path> log;
  ingest::ParseOptions parse;
  std::set<std::int64_t> queues;
  std::optional<std::string> window_start;
  std::optional<std::string> window_end;
  std::optional<int> max_nodes;
  ingest::TimeScale scale;
  std::optional<SamplingConf> sampling;
  /// Pre-sampled users; used instead of sampling when present.
  std::optional<std::vector<UserId>> pool;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  sim::SimConfig sim;
  WorkloadConf workload;
  std::optional<Seconds> warmup_end;
  Seconds day_seconds = 86400;
  Seconds timeline_step = 1;
  std::map<std::string, std::shared_ptr<const malleability::AppModel>> apps;
  std::map<std::string, std::shared_ptr<const malleability::PolicyConfig>> policies;
  std::vector<submit::GenerativeUserSpec> users;

  nlohmann::json resolved;
  std::string hash;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<Seconds> warmup_end;
  std::optional<std::string> scale;
  /// Replaces the workload log path.
  std::optional<std::filesystem::path> log;
};

/// Reads a config file, merging its "include" files underneath it. Relative
/// paths inside each file resolve against that file's directory.
nlohmann::json load_config_json(const std::filesystem::path& path);

malleability::AppModel app_model_from_json(const nlohmann::json& j, const std::string& name);
nlohmann::json app_model_to_json(const malleability::AppModel& m);
malleability::PolicyConfig policy_from_json(const nlohmann::json& j);

/// Builds a scenario from resolved JSON; `base_dir` anchors relative paths.
Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path, const Overrides& overrides = {});

std::string sha256_hex(const std::string& data);

struct PreparedWorkload {
  /// Final replay input: filtered, sampled and time-scaled.
  ingest::WorkloadLog log;
  std::optional<sampling::SamplingSpec> sampling_spec;
  std::optional<sampling::SamplingResult> sampling;
};

/// Ingest stage: parse and filter the log, then scale time.
ingest::WorkloadLog ingest_log(const WorkloadConf& w, bool scale);
PreparedWorkload prepare_workload(const Scenario& s);

struct UserOutcome {
  UserId user = 0;
  Seconds t0 = 0;
  std::vector<Seconds> submissions;
  std::vector<submit::CompletionNotice> completions;
  bool incomplete = false;
  std::optional<Seconds> deadline;
};

struct ScenarioRun {
  PreparedWorkload workload;
  sim::RunResult result;
  std::vector<UserOutcome> users;
};

ScenarioRun run_scenario(const Scenario& s);

metrics::ReportOptions report_options(const Scenario& s);

/// Writes the trace, ledger, report files and the resolved config with its hash.
void write_outputs(const std::filesystem::path& dir, const Scenario& s, const ScenarioRun& run);

/// Writes resolved_config.json and config.sha256.
void write_resolved_config(const std::filesystem::path& dir, const Scenario& s);

}  // namespace mallsim::scenario
