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

// Standard Workload Format (SWF) ingestion: parsing, filtering, time scaling
// and distribution summaries of historical job logs.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mallsim/common.hpp"

namespace mallsim::ingest {

enum class JobStatus { completed, failed, cancelled, unknown };

/// Maps the SWF status code (field 11) onto JobStatus.
JobStatus status_from_code(int code);

/// One SWF job record. Fields not used by the replay are kept so that a
/// parsed log can be written back without loss.
struct SwfJob {
  JobId job_id = 0;
  Seconds submit_time = 0;
  Seconds wait_time = -1;
  Seconds run_time = 0;
  std::int64_t allocated_processors = -1;
  double avg_cpu_time = -1;
  double used_memory = -1;
  std::int64_t requested_processors = -1;
  Seconds requested_time = -1;
  double requested_memory = -1;
  int status_code = -1;
  UserId user_id = -1;
  std::int64_t group_id = -1;
  std::int64_t executable_id = -1;
  std::int64_t queue_id = -1;
  std::int64_t partition_id = -1;
  std::int64_t preceding_job = -1;
  Seconds think_time = -1;

  /// Whole nodes needed: ceil(processors / cores_per_node), where processors
  /// is the allocated count, or the requested count when allocation is unknown.
  int nodes_requested = 1;

  JobStatus status() const { return status_from_code(status_code); }
  double node_hours() const {
    return static_cast<double>(nodes_requested) * static_cast<double>(run_time) / 3600.0;
  }

  bool operator==(const SwfJob&) const = default;
};

struct WorkloadLog {
  std::vector<SwfJob> jobs;  // non-decreasing submit_time
  int cores_per_node = 1;
  /// Unix time of relative t = 0.
  std::int64_t origin_timestamp = 0;
  /// Offset from UTC (seconds) used when bucketing submissions into calendar days.
  std::int64_t utc_offset = 0;
  /// Compression already applied to the times of this log (1 = original time).
  /// Day bucketing always happens in original time.
  double time_scale = 1.0;
  /// End of the covered window, relative to t = 0, if known.
  std::optional<Seconds> span_end;
  /// Header entries not managed by the fields above, in file order. Lines
  /// without a "key:" prefix are stored with an empty key.
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> warnings;

  std::set<std::int64_t> declared_queues() const;
  bool operator==(const WorkloadLog& o) const {
    return jobs == o.jobs && cores_per_node == o.cores_per_node &&
           origin_timestamp == o.origin_timestamp && utc_offset == o.utc_offset &&
           time_scale == o.time_scale && span_end == o.span_end && metadata == o.metadata;
  }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ParseOptions {
  /// Overrides the cores-per-node value derived from the header.
  std::optional<int> cores_per_node;
  /// Overrides the header's time zone offset.
  std::optional<std::int64_t> utc_offset;
  /// Missing mandatory header keys raise ParseError instead of a warning.
  bool strict_header = false;
};

WorkloadLog parse_swf(std::istream& in, const ParseOptions& options = {});
WorkloadLog parse_swf_file(const std::string& path, const ParseOptions& options = {});
void write_swf(std::ostream& out, const WorkloadLog& log);
void write_swf_file(const std::string& path, const WorkloadLog& log);

struct FilterSpec {
  /// Queues to keep; empty keeps every queue.
  std::set<std::int64_t> keep_queues;
  /// Calendar window as Unix timestamps, [start, end).
  std::int64_t window_start = 0;
  std::int64_t window_end = 0;
  std::optional<int> max_nodes;
};

/// Keeps jobs matching the spec and rebases times so the window starts at 0.
WorkloadLog filter(const WorkloadLog& log, const FilterSpec& spec);

/// A positive rational compression factor; times are divided by it.
struct TimeScale {
  std::int64_t num = 1;
  std::int64_t den = 1;

  static TimeScale parse(const std::string& text);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Divides a duration by the factor, rounding to the nearest second (halves up).
Seconds scale_seconds(Seconds t, const TimeScale& scale);

WorkloadLog scale_time(const WorkloadLog& log, const TimeScale& scale);

/// Calendar-day index (days since the Unix epoch, local to the log's offset)
/// of relative log time t.
std::int64_t day_index(const WorkloadLog& log, Seconds t);

/// Number of calendar days spanned by the log window (at least 1 for a
/// non-empty log), together with the index of the first day.
std::pair<std::int64_t, std::int64_t> day_span(const WorkloadLog& log);

/// Parses "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SS" as local time at the given
/// UTC offset and returns the Unix timestamp.
std::int64_t parse_datetime(const std::string& text, std::int64_t utc_offset);
std::string format_date(std::int64_t day);

struct DaySummary {
  std::int64_t day = 0;  // days since epoch (local)
  std::string date;
  std::map<UserId, int> submissions;
  std::map<UserId, double> node_hours;
};

struct SizeBucket {
  int nodes = 0;
  int jobs = 0;
  double job_fraction = 0;
  double node_hours = 0;
  double node_hour_fraction = 0;
  double cumulative_job_fraction = 0;
  double cumulative_node_hour_fraction = 0;
};

struct DistributionReport {
  std::size_t total_jobs = 0;
  std::size_t total_users = 0;
  double total_node_hours = 0;
  std::vector<DaySummary> days;
  /// (run_time, fraction of jobs with run_time <= value), one entry per
  /// distinct run time.
  std::vector<std::pair<Seconds, double>> runtime_cdf;
  std::vector<SizeBucket> sizes;
};

DistributionReport summarize(const WorkloadLog& log);
void write_report_json(std::ostream& out, const DistributionReport& report);

}  // namespace mallsim::ingest
