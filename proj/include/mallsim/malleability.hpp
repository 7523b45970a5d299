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

// Malleable application model and the reconfiguration policies evaluated at
// an application's synchronization points.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mallsim/common.hpp"

namespace mallsim::malleability {

/// Performance model of an iterative malleable application.
struct AppModel {
  std::string name;
  /// Allowed allocation sizes, ascending.
  std::vector<int> level_set;
  /// Milliseconds per iteration at each level (parallel to level_set).
  std::vector<std::int64_t> step_time_ms;
  int total_steps = 1800;
  /// Seconds to move between adjacent levels, keyed by (from, to).
  std::map<std::pair<int, int>, Seconds> reconfig_cost;
  /// Optional explicit parallel efficiency per level; derived from step
  /// times when empty.
  std::vector<double> pe_table;

  /// Throws std::invalid_argument when the model is inconsistent.
  void validate() const;

  bool has_level(int nodes) const;
  std::size_t level_index(int nodes) const;
  std::int64_t step_ms(int nodes) const;
  /// Wall time of `steps` iterations at `nodes`, rounded up to whole seconds.
  Seconds compute_time(int nodes, std::int64_t steps) const;
  Seconds run_time(int nodes) const { return compute_time(nodes, total_steps); }
  Seconds cost(int from, int to) const;

  /// Next level above `nodes` not exceeding `limit`.
  std::optional<int> level_above(int nodes, int limit) const;
  /// Next level below `nodes` not under `limit`.
  std::optional<int> level_below(int nodes, int limit) const;
  /// Largest level in [lo, hi] not exceeding `available`.
  std::optional<int> largest_fitting(int lo, int hi, int available) const;

  /// MPDATA calibration: linear speedup up to 16 nodes, 1.42x from 16 to 32,
  /// 1.2x from 32 to 64; 18.5 scaled hours at 16 nodes over 1,800 steps.
  static AppModel mpdata();
};

double speedup(const AppModel& model, int nodes);

/// Parallel efficiency speedup(n) / n, or the explicit table entry.
double pe_of(const AppModel& model, int nodes);

enum class PolicyKind { always_grow, par_efficiency, none };
std::string_view to_string(PolicyKind k);
PolicyKind policy_kind_from_string(std::string_view s);

struct PolicyConfig {
  PolicyKind kind = PolicyKind::none;
  double pe_shrink_threshold = 0.85;
  double pe_expand_threshold = 0.10;
  /// Require current_nodes sync points between reconfigurations.
  bool iteration_inhibitor = false;
  /// Sync points required per allocated node when the iteration inhibitor is on.
  int iterations_per_node = 1;
  /// Reject reconfigurations costing more than this many seconds.
  std::optional<Seconds> cost_inhibitor;
  int nodes_min = 1;
  int nodes_max = 1;

  void validate() const;
};

enum class Action { none, expand, shrink };
std::string_view to_string(Action a);

struct ReconfigDecision {
  Action action = Action::none;
  std::optional<int> target_nodes;
  std::optional<JobId> boosted_pending_job;

  bool operator==(const ReconfigDecision&) const = default;
};

struct PendingView {
  JobId id = 0;
  int nodes_min = 1;
};

/// What a policy may observe of the cluster. Pending jobs are in priority order.
struct ClusterView {
  int free_nodes = 0;
  std::span<const PendingView> pending;
  /// Free nodes an expansion may take; all free nodes when absent.
  std::optional<int> expandable_nodes;
};

/// Execution state of a running malleable job.
struct Progress {
  int nodes = 1;
  std::int64_t total_steps = 0;
  std::int64_t steps_done = 0;
  /// Start of the current compute phase and the step count at that instant.
  Seconds phase_origin = 0;
  std::int64_t phase_origin_steps = 0;
  std::int64_t syncs_since_reconfig = 0;
  std::int64_t sync_count = 0;
  int reconfigurations = 0;
  Seconds overhead = 0;

  static Progress start(int nodes, std::int64_t total_steps, Seconds now);
};

/// Sync points that must elapse after a reconfiguration before the next one.
std::int64_t inhibitor_iterations(const Progress& job, const PolicyConfig& policy);

ReconfigDecision evaluate_policy(const ClusterView& cluster, const Progress& job,
                                 const PolicyConfig& policy, const AppModel& model);

struct Verdict {
  bool allowed = true;
  std::string reason;
};

Verdict inhibitor_check(const Progress& job, const PolicyConfig& policy, const AppModel& model,
                        const ReconfigDecision& proposed);

/// Time at which the next iteration completes.
Seconds next_sync_time(const Progress& job, const AppModel& model);
/// Completion time if the job keeps its current size.
Seconds projected_end(const Progress& job, const AppModel& model);
/// Marks one more iteration as completed.
void record_sync(Progress& job);
/// Pauses the job for the reconfiguration cost, then resumes at `target`.
void reconfigure(Progress& job, int target, Seconds now, Seconds cost);

struct ProgressRecord {
  std::int64_t steps_done = 0;
  std::int64_t remaining_steps = 0;
  std::int64_t sync_count = 0;
  std::int64_t syncs_since_reconfig = 0;
  int reconfigurations = 0;
  Seconds overhead = 0;
};

ProgressRecord remaining_work_accounting(const Progress& job);

struct LedgerEntry {
  JobId job = 0;
  int from = 0;
  int to = 0;
  Seconds cost = 0;
  Seconds t = 0;
  bool operator==(const LedgerEntry&) const = default;
};

/// Reconfiguration ledger as CSV: job_id,from,to,cost_s,t
void write_ledger_csv(std::ostream& out, std::span<const LedgerEntry> ledger);
std::vector<LedgerEntry> read_ledger_csv(std::istream& in);

}  // namespace mallsim::malleability
