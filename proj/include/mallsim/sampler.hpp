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

// Random user sampling: selects a subset of a log's users whose combined
// daily load falls inside a band around a target.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mallsim/ingest.hpp"

namespace mallsim::sampling {

enum class LoadStatistic { mean, median };

std::string_view to_string(LoadStatistic s);
LoadStatistic statistic_from_string(std::string_view s);

struct SamplingSpec {
  /// Target load in node-hours per day.
  double target_daily_load = 0;
  /// Nodes in the target platform; users with a job needing >= this are skipped.
  int platform_nodes = 1;
  LoadStatistic statistic = LoadStatistic::mean;
  double band_low = 0.95;
  double band_high = 1.05;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class DrawOutcome { accepted, rejected_oversize, rejected_overshoot };
std::string_view to_string(DrawOutcome o);

struct DrawRecord {
  UserId user = 0;
  DrawOutcome outcome = DrawOutcome::accepted;
  /// Committed pool load after this draw.
  double load = 0;
  bool operator==(const DrawRecord&) const = default;
};

struct UserPool {
  std::vector<UserId> users;  // ascending
  double achieved_load = 0;
  std::vector<DrawRecord> trace;
  bool operator==(const UserPool&) const = default;
};

struct SamplingFailed {
  UserPool best;
  std::string reason;
};

using SamplingResult = std::variant<UserPool, SamplingFailed>;

std::map<UserId, std::vector<ingest::SwfJob>> group_by_user(const ingest::WorkloadLog& log);

/// Per-day node-hours of the given users' jobs, attributed to submission day,
/// over every calendar day of the log span.
std::vector<double> daily_table(std::span<const UserId> users, const ingest::WorkloadLog& log);

/// Mean or median of daily_table().
double daily_load(std::span<const UserId> users, const ingest::WorkloadLog& log,
                  LoadStatistic statistic);

double reduce(std::span<const double> per_day, LoadStatistic statistic);

/// Picks the index of the next candidate among the remaining ones.
using CandidateDrawer = std::function<std::size_t(std::span<const UserId> remaining)>;

/// Seeded uniform drawer; deterministic across platforms.
CandidateDrawer seeded_drawer(std::uint64_t seed);

SamplingResult sample_users(const ingest::WorkloadLog& log, const SamplingSpec& spec);
SamplingResult sample_users(const ingest::WorkloadLog& log, const SamplingSpec& spec,
                            const CandidateDrawer& draw);

/// Jobs of the pool's users, in log order.
ingest::WorkloadLog restrict_to_users(const ingest::WorkloadLog& log, std::span<const UserId> users);

/// JSON sidecar describing the sampling outcome.
void write_sidecar(std::ostream& out, const SamplingSpec& spec, const SamplingResult& result);

}  // namespace mallsim::sampling
