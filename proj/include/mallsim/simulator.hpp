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

// Discrete-event simulation of a whole-node cluster. Implements RmsInterface so
// submitters can drive it exactly as they would a live resource manager.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <vector>

#include "mallsim/malleability.hpp"
#include "mallsim/scheduler.hpp"
#include "mallsim/submitter.hpp"
#include "mallsim/trace.hpp"

namespace mallsim::sim {

struct SimConfig {
  int total_nodes = 1;
  sched::SchedulerConfig scheduler;
  /// Events after this instant are not processed.
  std::optional<Seconds> horizon;
  /// Emit one trace record per completed iteration of malleable jobs.
  bool trace_syncs = false;
  /// Expansions may only take nodes the blocked head job does not need for
  /// its reservation.
  bool reservation_aware_expansion = false;
  /// Livelock guard: events allowed at a single instant.
  std::uint64_t max_events_per_instant = 10'000'000;

  void validate() const;
};

struct SimulationLivelock : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunResult {
  trace::Trace trace;
  std::vector<malleability::LedgerEntry> ledger;
  std::uint64_t events = 0;
  /// Policy decisions suppressed by an inhibitor.
  std::uint64_t vetoes = 0;
  /// Expansions dropped because the nodes were gone.
  std::uint64_t dropped = 0;
  bool horizon_reached = false;
  std::vector<JobId> unfinished;
};

class Simulator final : public submit::RmsInterface {
 public:
  explicit Simulator(SimConfig cfg);

  Seconds now() const override { return clock_; }
  bool submit_at(Seconds t, submit::JobRequest job) override;
  void subscribe(submit::CompletionHandler handler) override;

  /// Processes events until none remain or the horizon is passed.
  RunResult run();

  int free_nodes() const { return free_; }

 private:
  enum class EventKind { job_end = 0, submit = 1, sync_point = 2, scheduler_tick = 3 };

  struct Event {
    Seconds t;
    EventKind kind;
    JobId job;
    std::uint64_t seq;
    std::size_t payload;

    bool operator>(const Event& o) const {
      if (t != o.t) return t > o.t;
      if (kind != o.kind) return kind > o.kind;
      if (job != o.job) return job > o.job;
      return seq > o.seq;
    }
  };

  struct Running {
    submit::JobRequest req;
    Seconds submit_time = 0;
    Seconds start = 0;
    int nodes = 0;
    /// Fixed end of a rigid job.
    Seconds end = 0;
    std::optional<malleability::Progress> progress;
  };

  void push(Seconds t, EventKind kind, JobId job, std::size_t payload = 0);
  void request_tick();
  void on_submit(const Event& e);
  void on_end(const Event& e);
  void on_sync(const Event& e);
  void on_tick();
  void start_job(JobId id, int nodes);
  void schedule_progress(JobId id, Running& r);
  Seconds predicted_end(const Running& r) const;
  void record(Seconds t, trace::Kind kind, JobId job, int nodes,
              nlohmann::ordered_json detail = nlohmann::ordered_json::object());
  std::optional<std::string> admission_error(const submit::JobRequest& job) const;
  sched::PendingJob make_pending(const submit::JobRequest& job) const;
  void check_capacity() const;

  SimConfig cfg_;
  Seconds clock_ = 0;
  int free_;
  std::uint64_t seq_ = 0;
  std::uint64_t submit_counter_ = 0;
  std::uint64_t boost_counter_ = 0;
  std::optional<Seconds> queued_tick_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::vector<submit::JobRequest> submissions_;
  std::set<JobId> seen_ids_;
  std::vector<sched::PendingJob> pending_;
  std::map<JobId, submit::JobRequest> pending_requests_;
  std::map<JobId, Running> running_;
  std::vector<submit::CompletionHandler> handlers_;
  RunResult result_;
};

bool is_malleable(const submit::JobRequest& job);

}  // namespace mallsim::sim
