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

// mallsim: ingest, sample, simulate, report and sweep.

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mallsim/ingest.hpp"
#include "mallsim/metrics.hpp"
#include "mallsim/sampler.hpp"
#include "mallsim/scenario.hpp"
#include "mallsim/simulator.hpp"
#include "mallsim/trace.hpp"

extern char** environ;

namespace fs = std::filesystem;
using namespace mallsim;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kSamplingFailed = 3;
constexpr int kLivelock = 4;

// Records the effective parameters of a non-scenario command.
void write_params(const fs::path& dir, const nlohmann::json& params) {
  fs::create_directories(dir);
  std::ofstream cfg(dir / "resolved_config.json", std::ios::binary);
  cfg << params.dump(2) << '\n';
  std::ofstream h(dir / "config.sha256", std::ios::binary);
  h << scenario::sha256_hex(params.dump()) << '\n';
}

struct IngestArgs {
  std::string log;
  std::string config;
  std::vector<std::int64_t> queues;
  std::string start, end;
  std::optional<int> max_nodes;
  std::optional<int> cores_per_node;
  std::optional<std::string> scale;
  std::string out = "out";
};

int cmd_ingest(const IngestArgs& a) {
  scenario::WorkloadConf w;
  if (!a.config.empty()) w = scenario::load_scenario(a.config).workload;
  if (!a.log.empty()) w.log = a.log;
  if (!w.log) throw scenario::ConfigError("no log given");
  if (!a.queues.empty()) w.queues = {a.queues.begin(), a.queues.end()};
  if (!a.start.empty()) w.window_start = a.start;
  if (!a.end.empty()) w.window_end = a.end;
  if (a.max_nodes) w.max_nodes = a.max_nodes;
  if (a.cores_per_node) w.parse.cores_per_node = a.cores_per_node;
  if (a.scale) w.scale = ingest::TimeScale::parse(*a.scale);
  if (!fs::exists(*w.log)) throw scenario::ConfigError("log not found: " + w.log->string());

  const auto log = scenario::ingest_log(w, true);
  const fs::path out(a.out);
  nlohmann::json params = {{"command", "ingest"},
                           {"log", w.log->string()},
                           {"queues", w.queues},
                           {"start", w.window_start.value_or("")},
                           {"end", w.window_end.value_or("")},
                           {"max_nodes", w.max_nodes ? nlohmann::json(*w.max_nodes) : nlohmann::json(nullptr)},
                           {"time_scale", std::to_string(w.scale.num) + "/" + std::to_string(w.scale.den)}};
  write_params(out, params);
  ingest::write_swf_file((out / "workload.swf").string(), log);
  if (!log.jobs.empty()) {
    std::ofstream rep(out / "distribution.json", std::ios::binary);
    ingest::write_report_json(rep, ingest::summarize(log));
  }
  for (const auto& warn : log.warnings) std::cerr << "warning: " << warn << '\n';
  std::cout << log.jobs.size() << " jobs written to " << (out / "workload.swf").string() << '\n';
  return kOk;
}

struct SampleArgs {
  std::string swf;
  std::optional<double> target;
  std::optional<double> target_fraction;
  int nodes = 0;
  std::string statistic = "mean";
  double band_low = 0.95, band_high = 1.05;
  std::uint64_t seed = 0;
  std::string out = "out";
};

int cmd_sample(const SampleArgs& a) {
  if (!fs::exists(a.swf)) throw scenario::ConfigError("log not found: " + a.swf);
  const auto log = ingest::parse_swf_file(a.swf);
  sampling::SamplingSpec spec;
  if (a.target.has_value() == a.target_fraction.has_value()) {
    throw scenario::ConfigError("give exactly one of --target and --target-fraction");
  }
  spec.target_daily_load = a.target ? *a.target : *a.target_fraction * a.nodes * 24.0;
  spec.platform_nodes = a.nodes;
  spec.statistic = sampling::statistic_from_string(a.statistic);
  spec.band_low = a.band_low;
  spec.band_high = a.band_high;
  spec.seed = a.seed;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw scenario::ConfigError(e.what());
  }
  const auto result = sampling::sample_users(log, spec);
  const fs::path out(a.out);
  write_params(out, {{"command", "sample"},
                     {"swf", a.swf},
                     {"target_daily_load", spec.target_daily_load},
                     {"platform_nodes", spec.platform_nodes},
                     {"statistic", a.statistic},
                     {"band", {spec.band_low, spec.band_high}},
                     {"seed", spec.seed}});
  {
    std::ofstream side(out / "sampling.json", std::ios::binary);
    sampling::write_sidecar(side, spec, result);
  }
  if (const auto* failed = std::get_if<sampling::SamplingFailed>(&result)) {
    std::cerr << "sampling failed: " << failed->reason << " (best pool " << failed->best.users.size()
              << " users, load " << failed->best.achieved_load << ")\n";
    return kSamplingFailed;
  }
  const auto& pool = std::get<sampling::UserPool>(result);
  ingest::write_swf_file((out / "baseline.swf").string(), sampling::restrict_to_users(log, pool.users));
  std::cout << pool.users.size() << " users, daily load " << pool.achieved_load << " node-hours\n";
  return kOk;
}

struct SimArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<Seconds> warmup_end;
  std::optional<std::string> scale;
  std::optional<std::string> log;
  std::string out = "out";
};

int cmd_simulate(const SimArgs& a) {
  scenario::Overrides o{a.seed, a.warmup_end, a.scale, std::nullopt};
  if (a.log) o.log = *a.log;
  const auto s = scenario::load_scenario(a.config, o);
  const auto run = scenario::run_scenario(s);
  scenario::write_outputs(a.out, s, run);
  const auto summary = metrics::summarize(run.result.trace, scenario::report_options(s));
  std::cout << s.name << ": makespan " << summary.makespan_complete << " s";
  if (summary.makespan_generative) std::cout << ", generative makespan " << *summary.makespan_generative << " s";
  std::cout << ", " << summary.reconfig.total() << " reconfigurations\n";
  return kOk;
}

struct ReportArgs {
  std::string trace;
  std::string diff;
  Seconds warmup_end = 0;
  Seconds day_seconds = 86400;
  Seconds timeline_step = 1;
  std::string out = "out";
};

int cmd_report(const ReportArgs& a) {
  if (!fs::exists(a.trace)) throw scenario::ConfigError("trace not found: " + a.trace);
  const auto tr = trace::read_ndjson_file(a.trace);
  const metrics::ReportOptions opts{a.warmup_end, a.day_seconds};
  const fs::path out(a.out);
  write_params(out, {{"command", "report"},
                     {"trace", a.trace},
                     {"diff", a.diff},
                     {"warmup_end", a.warmup_end},
                     {"day_seconds", a.day_seconds},
                     {"timeline_step", a.timeline_step}});
  metrics::export_report(a.out, tr, opts, a.timeline_step);
  if (!a.diff.empty()) {
    if (!fs::exists(a.diff)) throw scenario::ConfigError("reference trace not found: " + a.diff);
    const auto ref = trace::read_ndjson_file(a.diff);
    const auto diffs = metrics::wait_diffs(metrics::job_records(tr), metrics::job_records(ref));
    std::ofstream d(out / "wait_diff.csv", std::ios::binary);
    metrics::write_wait_diff_csv(d, diffs);
  }
  return kOk;
}

struct SweepArgs {
  std::vector<std::string> configs;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  int jobs = 0;
};

int cmd_sweep(const SweepArgs& a, const std::string& self) {
  const int parallel = a.jobs > 0 ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
  std::vector<pid_t> running;
  int worst = kOk;
  auto reap = [&] {
    int status = 0;
    const pid_t pid = waitpid(-1, &status, 0);
    if (pid <= 0) return;
    running.erase(std::remove(running.begin(), running.end(), pid), running.end());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 1;
    worst = std::max(worst, code);
  };
  for (const auto& cfg : a.configs) {
    while (static_cast<int>(running.size()) >= parallel) reap();
    const std::string dir = (fs::path(a.out) / fs::path(cfg).stem()).string();
    std::vector<std::string> args = {self, "simulate", "--config", cfg, "--out", dir};
    if (a.seed) {
      args.push_back("--seed");
      args.push_back(std::to_string(*a.seed));
    }
    std::vector<char*> argv;
    for (auto& s : args) argv.push_back(s.data());
    argv.push_back(nullptr);
    pid_t pid = 0;
    if (posix_spawn(&pid, self.c_str(), nullptr, nullptr, argv.data(), environ) != 0) {
      throw std::runtime_error("cannot start " + self);
    }
    std::cout << "started " << cfg << " -> " << dir << '\n';
    running.push_back(pid);
  }
  while (!running.empty()) reap();
  return worst;
}

std::string self_path(const char* argv0) {
  std::error_code ec;
  auto p = fs::read_symlink("/proc/self/exe", ec);
  return ec ? std::string(argv0) : p.string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Malleability-aware cluster workload replay simulator"};
  app.require_subcommand(1);

  IngestArgs ia;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse, filter and time-scale an SWF log");
  ingest_cmd->add_option("log", ia.log, "SWF log");
  ingest_cmd->add_option("--config", ia.config, "Take the workload section from a scenario")->envname("MALLSIM_CONFIG");
  ingest_cmd->add_option("--queues", ia.queues, "Queues to keep");
  ingest_cmd->add_option("--start", ia.start, "Window start, YYYY-MM-DD[THH:MM:SS]");
  ingest_cmd->add_option("--end", ia.end, "Window end (exclusive)");
  ingest_cmd->add_option("--max-nodes", ia.max_nodes, "Drop jobs needing more nodes");
  ingest_cmd->add_option("--cores-per-node", ia.cores_per_node, "Override the header value");
  ingest_cmd->add_option("--scale", ia.scale, "Time-scale factor, e.g. 10 or 5/2")->envname("MALLSIM_SCALE");
  ingest_cmd->add_option("--out", ia.out, "Output directory")->envname("MALLSIM_OUT");

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "Sample users to a target daily load");
  sample_cmd->add_option("swf", sa.swf, "Filtered, unscaled SWF log")->required();
  sample_cmd->add_option("--target", sa.target, "Target node-hours per day");
  sample_cmd->add_option("--target-fraction", sa.target_fraction, "Target as a fraction of nodes x 24 h");
  sample_cmd->add_option("--nodes", sa.nodes, "Target platform nodes")->required();
  sample_cmd->add_option("--statistic", sa.statistic, "mean or median");
  sample_cmd->add_option("--band-low", sa.band_low);
  sample_cmd->add_option("--band-high", sa.band_high);
  sample_cmd->add_option("--seed", sa.seed)->envname("MALLSIM_SEED");
  sample_cmd->add_option("--out", sa.out, "Output directory")->envname("MALLSIM_OUT");

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a scenario");
  sim_cmd->add_option("--config", sim.config, "Scenario file")->required()->envname("MALLSIM_CONFIG");
  sim_cmd->add_option("--seed", sim.seed)->envname("MALLSIM_SEED");
  sim_cmd->add_option("--warmup-end", sim.warmup_end, "Warm-up end, scaled seconds")->envname("MALLSIM_WARMUP_END");
  sim_cmd->add_option("--scale", sim.scale, "Time-scale factor")->envname("MALLSIM_SCALE");
  sim_cmd->add_option("--log", sim.log, "Workload log, replacing the scenario's")->envname("MALLSIM_LOG");
  sim_cmd->add_option("--out", sim.out, "Output directory")->envname("MALLSIM_OUT");

  ReportArgs ra;
  auto* report_cmd = app.add_subcommand("report", "Compute metrics from a trace");
  report_cmd->add_option("trace", ra.trace, "Trace (NDJSON)")->required();
  report_cmd->add_option("--diff", ra.diff, "Reference trace for per-job wait differences");
  report_cmd->add_option("--warmup-end", ra.warmup_end)->envname("MALLSIM_WARMUP_END");
  report_cmd->add_option("--day-seconds", ra.day_seconds, "Length of a day in trace seconds");
  report_cmd->add_option("--timeline-step", ra.timeline_step, "Write every n-th timeline second");
  report_cmd->add_option("--out", ra.out, "Output directory")->envname("MALLSIM_OUT");

  SweepArgs wa;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run several scenarios in parallel processes");
  sweep_cmd->add_option("configs", wa.configs, "Scenario files")->required();
  sweep_cmd->add_option("--seed", wa.seed)->envname("MALLSIM_SEED");
  sweep_cmd->add_option("--out", wa.out, "Root output directory")->envname("MALLSIM_OUT");
  sweep_cmd->add_option("-j,--jobs", wa.jobs, "Parallel processes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest_cmd) return cmd_ingest(ia);
    if (*sample_cmd) return cmd_sample(sa);
    if (*sim_cmd) return cmd_simulate(sim);
    if (*report_cmd) return cmd_report(ra);
    if (*sweep_cmd) return cmd_sweep(wa, self_path(argv[0]));
  } catch (const scenario::SamplingError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSamplingFailed;
  } catch (const sim::SimulationLivelock& e) {
    std::cerr << "error: simulation livelock: " << e.what() << '\n';
    return kLivelock;
  } catch (const ingest::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const scenario::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const trace::TraceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const metrics::UnmatchedJobs& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
