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

// User-based submission: traditional users replay fixed timestamps, generative
// users submit their next job a think time after the previous one completes.
// Both talk to a resource manager through RmsInterface.

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "mallsim/common.hpp"
#include "mallsim/ingest.hpp"
#include "mallsim/malleability.hpp"

namespace mallsim::submit {

struct JobRequest {
  JobId id = 0;
  UserId owner = 0;
  JobClass cls = JobClass::baseline;
  int nodes_min = 1;
  int nodes_max = 1;
  std::optional<Seconds> walltime;
  /// Fixed duration of a rigid replayed job.
  std::optional<Seconds> run_time;
  /// Application jobs run according to their model and policy instead.
  std::shared_ptr<const malleability::AppModel> app;
  std::shared_ptr<const malleability::PolicyConfig> policy;
  double base_priority = 0;
};

struct CompletionNotice {
  JobId job = 0;
  Seconds end_time = 0;
  UserId owner = 0;
  bool operator==(const CompletionNotice&) const = default;
};

using CompletionHandler = std::function<void(const CompletionNotice&)>;

/// Boundary to a resource manager. Every accepted submission eventually yields
/// exactly one completion notice.
class RmsInterface {
 public:
  virtual ~RmsInterface() = default;
  virtual Seconds now() const = 0;
  /// Queues a submission for time t >= now(). Returns false if t lies beyond
  /// the horizon, in which case nothing is queued.
  virtual bool submit_at(Seconds t, JobRequest job) = 0;
  virtual void subscribe(CompletionHandler handler) = 0;
};

/// Stand-in for a live resource manager adapter. Accepts submissions and never
/// reports completions.
class LiveRmsStub final : public RmsInterface {
 public:
  Seconds now() const override { return 0; }
  bool submit_at(Seconds t, JobRequest job) override;
  void subscribe(CompletionHandler handler) override;

  struct Submitted {
    Seconds t;
    JobId id;
  };
  const std::vector<Submitted>& submitted() const { return submitted_; }

 private:
  std::vector<Submitted> submitted_;
  std::vector<CompletionHandler> handlers_;
};

struct ScriptEntry {
  JobId job_id = 0;
  Seconds submit_time = 0;
  Seconds run_time = 0;
  int nodes = 1;
};

struct TraditionalScript {
  std::map<UserId, std::vector<ScriptEntry>> users;

  static TraditionalScript from_log(const ingest::WorkloadLog& log);
  void validate() const;
};

struct Submission {
  Seconds t = 0;
  JobRequest job;
};

/// All traditional submissions ordered by time, then user id, then script order.
std::vector<Submission> traditional_stream(const TraditionalScript& script);
/// Queues every traditional submission at its timestamp. Returns how many were
/// accepted.
std::size_t replay_traditional(const TraditionalScript& script, RmsInterface& rms);

struct JobTemplate {
  std::shared_ptr<const malleability::AppModel> app;
  std::shared_ptr<const malleability::PolicyConfig> policy;
  int nodes_min = 1;
  int nodes_max = 1;
  std::optional<Seconds> walltime;
};

struct GenerativeUserSpec {
  UserId user = 0;
  Seconds t0 = 0;
  Seconds think_time = 0;
  int count = 1;
  JobTemplate job_template;
  std::optional<Seconds> deadline;
  /// Id of the first submission; later ones follow consecutively.
  JobId first_job_id = 1;

  void validate() const;
};

/// t0 clamped to the end of the warm-up period, when there is one.
Seconds warmup_gate(const GenerativeUserSpec& spec, std::optional<Seconds> warmup_end);

/// Feedback-driven user holding at most one job in the system at a time.
class GenerativeUser {
 public:
  explicit GenerativeUser(GenerativeUserSpec spec);

  /// Queues the first submission at t0 and listens for completions. The user
  /// must outlive the resource manager's run.
  void attach(RmsInterface& rms);

  const GenerativeUserSpec& spec() const { return spec_; }
  const std::vector<Seconds>& submission_times() const { return submitted_; }
  const std::vector<CompletionNotice>& completions() const { return completed_; }
  /// True when a submission could not be queued before the horizon.
  bool incomplete() const { return incomplete_; }

 private:
  void submit_next(Seconds t);

  GenerativeUserSpec spec_;
  RmsInterface* rms_ = nullptr;
  std::vector<Seconds> submitted_;
  std::vector<CompletionNotice> completed_;
  std::optional<JobId> outstanding_;
  bool incomplete_ = false;
};

}  // namespace mallsim::submit
