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

// Metrics computed from event traces: allocation timeline, waiting times,
// makespans, node-hours, reconfiguration accounting and per-day consumption.

#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "mallsim/common.hpp"
#include "mallsim/malleability.hpp"
#include "mallsim/trace.hpp"

namespace mallsim::metrics {

inline constexpr int kSummaryVersion = 1;

struct Phase {
  Seconds start = 0;
  Seconds end = 0;
  int nodes = 0;
  bool operator==(const Phase&) const = default;
};

struct JobRecord {
  JobId id = 0;
  JobClass cls = JobClass::baseline;
  UserId user = 0;
  Seconds submit = 0;
  std::optional<Seconds> start;
  std::optional<Seconds> end;
  std::vector<Phase> phases;
  int reconfigurations = 0;

  bool finished() const { return end.has_value(); }
  Seconds wait() const { return *start - submit; }
  double node_hours() const;
  /// Allocation sizes held over the job's life, e.g. "16>32>16".
  std::string nodes_profile() const;
};

/// Jobs in submission order. Rejected submissions are skipped.
std::vector<JobRecord> job_records(const trace::Trace& trace);

struct TimelineSample {
  Seconds t = 0;
  int total = 0;
  int baseline = 0;
  int generative = 0;
  bool operator==(const TimelineSample&) const = default;
};

/// Allocated nodes during each second [t, t+1) from 0 up to the last event.
std::vector<TimelineSample> allocation_timeline(const trace::Trace& trace);

struct MeanStd {
  double avg = 0;
  double std = 0;
  bool operator==(const MeanStd&) const = default;
};

/// Population mean and standard deviation.
MeanStd mean_std(std::span<const double> xs);

/// Allocated fraction of the cluster over the seconds in [warmup_end, end of timeline).
MeanStd allocation_stats(std::span<const TimelineSample> timeline, int total_nodes, Seconds warmup_end);

struct WaitStats {
  std::size_t count = 0;
  double avg = 0;
  double std = 0;
  /// Running sum of waits in submission order.
  std::vector<double> accumulated;
  bool operator==(const WaitStats&) const = default;
};

/// Over started jobs, optionally restricted to one class.
WaitStats waiting_stats(std::span<const JobRecord> jobs, std::optional<JobClass> cls);

struct WaitDiff {
  JobId id = 0;
  Seconds wait = 0;
  Seconds reference_wait = 0;
  Seconds diff = 0;
};

struct UnmatchedJobs : std::runtime_error {
  explicit UnmatchedJobs(std::vector<JobId> ids);
  std::vector<JobId> ids;
};

/// Per baseline job, wait here minus wait in the reference run, in reference order.
std::vector<WaitDiff> wait_diffs(std::span<const JobRecord> jobs, std::span<const JobRecord> reference);

/// Last completion among the selected jobs, measured from t = 0.
std::optional<Seconds> makespan(std::span<const JobRecord> jobs, std::optional<JobClass> cls = std::nullopt);
std::optional<Seconds> makespan_of_users(std::span<const JobRecord> jobs, std::span<const UserId> users);

struct ReconfigSummary {
  int expansions = 0;
  int shrinkages = 0;
  Seconds expand_overhead = 0;
  Seconds shrink_overhead = 0;

  int total() const { return expansions + shrinkages; }
  Seconds overhead() const { return expand_overhead + shrink_overhead; }
  double avg_expand() const;
  double avg_shrink() const;
  double avg() const;
  bool operator==(const ReconfigSummary&) const = default;
};

ReconfigSummary reconfig_summary(std::span<const malleability::LedgerEntry> ledger);
/// Ledger rebuilt from the reconfiguration records of a trace.
std::vector<malleability::LedgerEntry> ledger_from_trace(const trace::Trace& trace);

struct DayUsage {
  Seconds start = 0;
  Seconds length = 0;
  /// Average allocated nodes over the day.
  double baseline = 0;
  double generative = 0;
  bool operator==(const DayUsage&) const = default;
};

struct NodesPerDay {
  Seconds window_start = 0;
  Seconds window_end = 0;
  Seconds day_seconds = 86400;
  std::vector<DayUsage> days;
  /// Average allocated nodes over the window, i.e. node-days per day.
  double baseline = 0;
  double generative = 0;
  double accumulated = 0;
  double available = 0;
  /// Shares of the available area, in percent.
  double baseline_pct = 0;
  double generative_pct = 0;
  double accumulated_pct = 0;
  bool operator==(const NodesPerDay&) const = default;
};

NodesPerDay nodes_per_day(std::span<const TimelineSample> timeline, int total_nodes, Seconds window_start,
                          Seconds window_end, Seconds day_seconds);

/// First generative submission to last generative completion, or the whole run
/// when there are no generative jobs.
std::pair<Seconds, Seconds> generative_window(std::span<const JobRecord> jobs);

struct ClassWait {
  std::size_t count = 0;
  double avg = 0;
  double std = 0;
  bool operator==(const ClassWait&) const = default;
};

struct PerJob {
  JobId id = 0;
  JobClass cls = JobClass::baseline;
  Seconds submit = 0;
  Seconds start = 0;
  Seconds end = 0;
  std::string nodes_profile;
  double node_hours = 0;
  Seconds wait = 0;
  bool operator==(const PerJob&) const = default;
};

struct MetricsSummary {
  int total_nodes = 0;
  Seconds warmup_end = 0;
  std::size_t submitted = 0;
  std::size_t completed = 0;
  std::size_t rejected = 0;
  Seconds makespan_complete = 0;
  std::optional<Seconds> makespan_baseline;
  std::optional<Seconds> makespan_generative;
  MeanStd alloc_rate;
  ClassWait wait_baseline;
  ClassWait wait_generative;
  ClassWait wait_all;
  double node_hours_baseline = 0;
  double node_hours_generative = 0;
  /// Spread of node-hours across generative jobs.
  MeanStd generative_job_node_hours;
  ReconfigSummary reconfig;
  NodesPerDay nodes_per_day;
  std::vector<PerJob> per_job;

  bool operator==(const MetricsSummary&) const = default;
};

struct ReportOptions {
  Seconds warmup_end = 0;
  Seconds day_seconds = 86400;
};

MetricsSummary summarize(const trace::Trace& trace, const ReportOptions& options);

nlohmann::ordered_json to_json(const MetricsSummary& s);
MetricsSummary summary_from_json(const nlohmann::json& j);

void write_timeline_csv(std::ostream& out, std::span<const TimelineSample> timeline, Seconds step = 1);
void write_jobs_csv(std::ostream& out, std::span<const JobRecord> jobs);
void write_wait_diff_csv(std::ostream& out, std::span<const WaitDiff> diffs);

/// Writes timeline.csv, jobs.csv, reconfig.csv and summary.json into `dir`.
void export_report(const std::string& dir, const trace::Trace& trace, const ReportOptions& options,
                   Seconds timeline_step = 1);

}  // namespace mallsim::metrics
