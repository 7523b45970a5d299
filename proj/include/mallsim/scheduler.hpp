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

// Priority ordering and backfill start decisions for a whole-node cluster.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mallsim/common.hpp"

namespace mallsim::sched {

enum class Backfill { easy, conservative };
enum class Tiebreak { submit_order, job_id };

std::string_view to_string(Backfill b);
Backfill backfill_from_string(std::string_view s);
std::string_view to_string(Tiebreak t);
Tiebreak tiebreak_from_string(std::string_view s);

struct SchedulerConfig {
  Backfill backfill = Backfill::easy;
  /// Priority gained per second of waiting.
  double aging_weight = 1.0;
  Tiebreak tiebreak = Tiebreak::submit_order;

  void validate() const;
};

struct PendingJob {
  JobId id = 0;
  UserId owner = 0;
  int nodes_min = 1;
  int nodes_max = 1;
  /// Sizes a moldable job may start at; empty means any size in [min, max].
  std::vector<int> levels;
  Seconds submit_time = 0;
  /// Position in the order submissions reached the scheduler.
  std::int64_t submit_order = 0;
  double base_priority = 0;
  /// Set when a reconfiguration policy raised this job above all others.
  /// Later boosts outrank earlier ones.
  std::optional<std::int64_t> boost_seq;
  /// Reservation length per start size (walltime limit or predicted run time).
  std::vector<std::pair<int, Seconds>> estimate;

  double priority(Seconds now, double aging_weight) const;
  Seconds estimate_for(int nodes) const;
};

struct RunningView {
  JobId id = 0;
  int nodes = 0;
  /// When the scheduler may assume the nodes come back; always > now.
  Seconds predicted_end = 0;
};

struct StartDecision {
  JobId id = 0;
  int nodes = 0;
  bool operator==(const StartDecision&) const = default;
};

/// Sorts pending jobs into scheduling order: boosted jobs first (most recent
/// boost first), then by descending priority, then by the configured tiebreak.
void order_pending(std::vector<PendingJob>& pending, Seconds now, const SchedulerConfig& cfg);

/// Largest admissible start size not exceeding `available`.
std::optional<int> start_size(const PendingJob& job, int available);

/// One scheduling pass. `pending` must already be in scheduling order.
/// Returns the jobs to start now, in start order.
std::vector<StartDecision> schedule_cycle(Seconds now, int free_nodes,
                                          std::span<const PendingJob> pending,
                                          std::span<const RunningView> running,
                                          const SchedulerConfig& cfg);

/// Free nodes that can be handed out now without delaying the reserved start of
/// the highest-priority pending job that does not fit. All free nodes when
/// nothing is blocked.
int spare_nodes(Seconds now, int free_nodes, std::span<const PendingJob> pending,
                std::span<const RunningView> running);

}  // namespace mallsim::sched
