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

#include "mallsim/submitter.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace mallsim::submit {

bool LiveRmsStub::submit_at(Seconds t, JobRequest job) {
  submitted_.push_back({t, job.id});
  return true;
}

void LiveRmsStub::subscribe(CompletionHandler handler) { handlers_.push_back(std::move(handler)); }

TraditionalScript TraditionalScript::from_log(const ingest::WorkloadLog& log) {
  TraditionalScript s;
  for (const auto& j : log.jobs) {
    s.users[j.user_id].push_back({j.job_id, j.submit_time, j.run_time, j.nodes_requested});
  }
  return s;
}

void TraditionalScript::validate() const {
  for (const auto& [user, entries] : users) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      if (e.nodes < 1 || e.run_time < 0 || e.submit_time < 0) {
        throw std::invalid_argument("script entry for job " + std::to_string(e.job_id) +
                                    " is not replayable");
      }
      if (i > 0 && e.submit_time < entries[i - 1].submit_time) {
        throw std::invalid_argument("script of user " + std::to_string(user) + " is not sorted");
      }
    }
  }
}

std::vector<Submission> traditional_stream(const TraditionalScript& script) {
  struct Keyed {
    Seconds t;
    UserId user;
    std::size_t pos;
    const ScriptEntry* e;
  };
  std::vector<Keyed> keyed;
  for (const auto& [user, entries] : script.users) {
    for (std::size_t i = 0; i < entries.size(); ++i) keyed.push_back({entries[i].submit_time, user, i, &entries[i]});
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.user != b.user) return a.user < b.user;
    return a.pos < b.pos;
  });
  std::vector<Submission> out;
  out.reserve(keyed.size());
  for (const auto& k : keyed) {
    JobRequest r;
    r.id = k.e->job_id;
    r.owner = k.user;
    r.cls = JobClass::baseline;
    r.nodes_min = r.nodes_max = k.e->nodes;
    r.run_time = k.e->run_time;
    out.push_back({k.t, std::move(r)});
  }
  return out;
}

std::size_t replay_traditional(const TraditionalScript& script, RmsInterface& rms) {
  script.validate();
  std::size_t accepted = 0;
  for (auto& s : traditional_stream(script)) {
    if (rms.submit_at(s.t, std::move(s.job))) ++accepted;
  }
  return accepted;
}

void GenerativeUserSpec::validate() const {
  if (count < 1) throw std::invalid_argument("generative user needs at least one submission");
  if (think_time < 0) throw std::invalid_argument("think time must be >= 0");
  if (t0 < 0) throw std::invalid_argument("t0 must be >= 0");
  const auto& tpl = job_template;
  if (tpl.nodes_min < 1 || tpl.nodes_max < tpl.nodes_min) {
    throw std::invalid_argument("generative job node range must satisfy 1 <= min <= max");
  }
  if (!tpl.app) throw std::invalid_argument("generative job template needs an app model");
  if (!tpl.app->largest_fitting(tpl.nodes_min, tpl.nodes_max, tpl.nodes_max)) {
    throw std::invalid_argument("generative job node range holds no app model level");
  }
}

Seconds warmup_gate(const GenerativeUserSpec& spec, std::optional<Seconds> warmup_end) {
  return warmup_end ? std::max(spec.t0, *warmup_end) : spec.t0;
}

GenerativeUser::GenerativeUser(GenerativeUserSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

void GenerativeUser::attach(RmsInterface& rms) {
  rms_ = &rms;
  rms.subscribe([this](const CompletionNotice& n) {
    if (!outstanding_ || n.job != *outstanding_) return;
    outstanding_.reset();
    completed_.push_back(n);
    if (submitted_.size() < static_cast<std::size_t>(spec_.count)) {
      submit_next(n.end_time + spec_.think_time);
    }
  });
  submit_next(std::max(spec_.t0, rms.now()));
}

void GenerativeUser::submit_next(Seconds t) {
  const auto& tpl = spec_.job_template;
  JobRequest r;
  r.id = spec_.first_job_id + static_cast<JobId>(submitted_.size());
  r.owner = spec_.user;
  r.cls = JobClass::generative;
  r.nodes_min = tpl.nodes_min;
  r.nodes_max = tpl.nodes_max;
  r.walltime = tpl.walltime;
  r.app = tpl.app;
  r.policy = tpl.policy;
  if (!rms_->submit_at(t, std::move(r))) {
    incomplete_ = true;
    return;
  }
  outstanding_ = spec_.first_job_id + static_cast<JobId>(submitted_.size());
  submitted_.push_back(t);
}

}  // namespace mallsim::submit
