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

#include "mallsim/simulator.hpp"

#include <algorithm>
#include <string>

namespace mallsim::sim {

namespace mall = malleability;
using nlohmann::ordered_json;

void SimConfig::validate() const {
  if (total_nodes < 1) throw std::invalid_argument("cluster needs at least one node");
  scheduler.validate();
  if (max_events_per_instant < 1) throw std::invalid_argument("max_events_per_instant < 1");
}

bool is_malleable(const submit::JobRequest& job) {
  return job.app && job.policy && job.policy->kind != mall::PolicyKind::none;
}

Simulator::Simulator(SimConfig cfg) : cfg_(std::move(cfg)), free_(cfg_.total_nodes) {
  cfg_.validate();
  result_.trace.total_nodes = cfg_.total_nodes;
}

void Simulator::push(Seconds t, EventKind kind, JobId job, std::size_t payload) {
  events_.push({t, kind, job, seq_++, payload});
}

bool Simulator::submit_at(Seconds t, submit::JobRequest job) {
  if (t < clock_) throw std::invalid_argument("submission in the past");
  if (cfg_.horizon && t > *cfg_.horizon) return false;
  submissions_.push_back(std::move(job));
  push(t, EventKind::submit, submissions_.back().id, submissions_.size() - 1);
  return true;
}

void Simulator::subscribe(submit::CompletionHandler handler) { handlers_.push_back(std::move(handler)); }

void Simulator::request_tick() {
  if (queued_tick_ && *queued_tick_ == clock_) return;
  queued_tick_ = clock_;
  push(clock_, EventKind::scheduler_tick, 0);
}

void Simulator::record(Seconds t, trace::Kind kind, JobId job, int nodes, ordered_json detail) {
  result_.trace.records.push_back({t, kind, job, nodes, std::move(detail)});
}

std::optional<std::string> Simulator::admission_error(const submit::JobRequest& job) const {
  if (seen_ids_.count(job.id)) return "duplicate job id";
  if (job.nodes_min < 1 || job.nodes_max < job.nodes_min) return "invalid node range";
  if (job.app) {
    if (!job.app->largest_fitting(job.nodes_min, job.nodes_max, cfg_.total_nodes)) {
      return "no application level in the node range fits the cluster";
    }
  } else {
    if (!job.run_time || *job.run_time < 0) return "rigid job without run time";
    if (job.nodes_min != job.nodes_max) return "rigid job with a node range";
  }
  if (job.nodes_min > cfg_.total_nodes) return "requests more nodes than the cluster has";
  return std::nullopt;
}

sched::PendingJob Simulator::make_pending(const submit::JobRequest& job) const {
  sched::PendingJob p;
  p.id = job.id;
  p.owner = job.owner;
  p.submit_time = clock_;
  p.submit_order = static_cast<std::int64_t>(submit_counter_);
  p.base_priority = job.base_priority;
  if (job.app) {
    for (int n : job.app->level_set) {
      if (n >= job.nodes_min && n <= job.nodes_max && n <= cfg_.total_nodes) p.levels.push_back(n);
    }
    // Smallest admissible start size acts as the minimum.
    p.nodes_min = p.levels.front();
    p.nodes_max = p.levels.back();
    for (int n : p.levels) p.estimate.emplace_back(n, job.walltime ? *job.walltime : job.app->run_time(n));
  } else {
    p.nodes_min = p.nodes_max = job.nodes_min;
    p.estimate.emplace_back(job.nodes_min, job.walltime ? *job.walltime : *job.run_time);
  }
  return p;
}

void Simulator::on_submit(const Event& e) {
  const auto& job = submissions_[e.payload];
  if (auto err = admission_error(job)) {
    record(clock_, trace::Kind::reject, job.id, job.nodes_min, {{"reason", *err}});
    return;
  }
  ordered_json d;
  d["class"] = to_string(job.cls);
  d["user"] = job.owner;
  d["nodes_min"] = job.nodes_min;
  d["nodes_max"] = job.nodes_max;
  d["malleable"] = is_malleable(job);
  seen_ids_.insert(job.id);
  record(clock_, trace::Kind::submit, job.id, job.nodes_min, std::move(d));
  pending_.push_back(make_pending(job));
  ++submit_counter_;
  pending_requests_.emplace(job.id, job);
  request_tick();
}

Seconds Simulator::predicted_end(const Running& r) const {
  Seconds end;
  if (r.req.walltime) {
    end = r.start + *r.req.walltime;
  } else if (r.progress) {
    end = mall::projected_end(*r.progress, *r.req.app);
  } else {
    end = r.end;
  }
  return std::max(end, clock_ + 1);
}

void Simulator::schedule_progress(JobId id, Running& r) {
  const auto& p = *r.progress;
  const Seconds t = mall::next_sync_time(p, *r.req.app);
  push(t, p.steps_done + 1 >= p.total_steps ? EventKind::job_end : EventKind::sync_point, id);
}

void Simulator::start_job(JobId id, int nodes) {
  auto it = std::find_if(pending_.begin(), pending_.end(), [&](const auto& p) { return p.id == id; });
  const Seconds submitted = it->submit_time;
  pending_.erase(it);
  auto req_it = pending_requests_.find(id);
  Running r;
  r.req = std::move(req_it->second);
  pending_requests_.erase(req_it);
  r.submit_time = submitted;
  r.start = clock_;
  r.nodes = nodes;
  free_ -= nodes;
  record(clock_, trace::Kind::start, id, nodes);
  auto [pos, inserted] = running_.emplace(id, std::move(r));
  auto& run = pos->second;
  if (is_malleable(run.req)) {
    run.progress = mall::Progress::start(nodes, run.req.app->total_steps, clock_);
    schedule_progress(id, run);
  } else {
    run.end = clock_ + (run.req.app ? run.req.app->run_time(nodes) : *run.req.run_time);
    push(run.end, EventKind::job_end, id);
  }
}

void Simulator::on_end(const Event& e) {
  auto it = running_.find(e.job);
  if (it == running_.end()) throw std::logic_error("end of unknown job " + std::to_string(e.job));
  auto& r = it->second;
  ordered_json d = ordered_json::object();
  if (r.progress) {
    mall::record_sync(*r.progress);
    d["steps"] = r.progress->steps_done;
    d["reconfigurations"] = r.progress->reconfigurations;
    d["overhead"] = r.progress->overhead;
  }
  free_ += r.nodes;
  record(clock_, trace::Kind::end, e.job, r.nodes, std::move(d));
  const submit::CompletionNotice notice{e.job, clock_, r.req.owner};
  running_.erase(it);
  request_tick();
  for (const auto& h : handlers_) h(notice);
}

void Simulator::on_sync(const Event& e) {
  auto& r = running_.at(e.job);
  auto& p = *r.progress;
  const auto& model = *r.req.app;
  const auto& policy = *r.req.policy;
  mall::record_sync(p);
  if (cfg_.trace_syncs) record(clock_, trace::Kind::sync, e.job, r.nodes, {{"step", p.steps_done}});

  const bool held = p.syncs_since_reconfig < mall::inhibitor_iterations(p, policy);
  if (!held) {
    sched::order_pending(pending_, clock_, cfg_.scheduler);
    std::vector<mall::PendingView> view;
    view.reserve(pending_.size());
    for (const auto& pj : pending_) view.push_back({pj.id, pj.nodes_min});
    int expandable = free_;
    if (cfg_.reservation_aware_expansion) {
      std::vector<sched::RunningView> rv;
      for (const auto& [id, other] : running_) rv.push_back({id, other.nodes, predicted_end(other)});
      expandable = sched::spare_nodes(clock_, free_, pending_, rv);
    }
    const auto decision = mall::evaluate_policy({free_, view, expandable}, p, policy, model);
    if (decision.action != mall::Action::none) {
      const auto verdict = mall::inhibitor_check(p, policy, model, decision);
      if (!verdict.allowed) {
        ++result_.vetoes;
      } else {
        const int from = p.nodes;
        const int to = *decision.target_nodes;
        if (to > from && to - from > free_) {
          ++result_.dropped;
        } else {
          const Seconds cost = model.cost(from, to);
          free_ -= to - from;
          r.nodes = to;
          mall::reconfigure(p, to, clock_, cost);
          result_.ledger.push_back({e.job, from, to, cost, clock_});
          ordered_json d;
          d["action"] = to_string(decision.action);
          d["from"] = from;
          d["to"] = to;
          d["cost"] = cost;
          d["step"] = p.steps_done;
          if (decision.boosted_pending_job) {
            d["boosted"] = *decision.boosted_pending_job;
            for (auto& pj : pending_) {
              if (pj.id == *decision.boosted_pending_job) pj.boost_seq = static_cast<std::int64_t>(++boost_counter_);
            }
          }
          record(clock_, trace::Kind::reconfig, e.job, to, std::move(d));
          request_tick();
        }
      }
    }
  }
  schedule_progress(e.job, r);
}

void Simulator::on_tick() {
  queued_tick_.reset();
  if (pending_.empty()) return;
  sched::order_pending(pending_, clock_, cfg_.scheduler);
  std::vector<sched::RunningView> view;
  view.reserve(running_.size());
  for (const auto& [id, r] : running_) view.push_back({id, r.nodes, predicted_end(r)});
  for (const auto& s : sched::schedule_cycle(clock_, free_, pending_, view, cfg_.scheduler)) {
    start_job(s.id, s.nodes);
  }
}

void Simulator::check_capacity() const {
  int used = 0;
  for (const auto& [id, r] : running_) used += r.nodes;
  if (free_ < 0 || used + free_ != cfg_.total_nodes) {
    throw std::logic_error("node accounting broken at t=" + std::to_string(clock_));
  }
}

RunResult Simulator::run() {
  std::uint64_t at_instant = 0;
  while (!events_.empty()) {
    const Event e = events_.top();
    if (cfg_.horizon && e.t > *cfg_.horizon) {
      result_.horizon_reached = true;
      break;
    }
    events_.pop();
    if (e.t < clock_) throw std::logic_error("event scheduled in the past");
    at_instant = e.t == clock_ ? at_instant + 1 : 1;
    if (at_instant > cfg_.max_events_per_instant) {
      throw SimulationLivelock("clock stuck at t=" + std::to_string(clock_) + " with " +
                               std::to_string(pending_.size()) + " pending and " +
                               std::to_string(running_.size()) + " running jobs");
    }
    clock_ = e.t;
    ++result_.events;
    switch (e.kind) {
      case EventKind::submit:
        on_submit(e);
        break;
      case EventKind::job_end:
        on_end(e);
        break;
      case EventKind::sync_point:
        on_sync(e);
        break;
      case EventKind::scheduler_tick:
        on_tick();
        break;
    }
    check_capacity();
  }
  if (!result_.horizon_reached && !pending_.empty()) {
    std::string ids;
    for (const auto& p : pending_) ids += " " + std::to_string(p.id);
    throw SimulationLivelock("no runnable events left but jobs still pending:" + ids);
  }
  for (const auto& [id, r] : running_) result_.unfinished.push_back(id);
  for (const auto& p : pending_) result_.unfinished.push_back(p.id);
  std::sort(result_.unfinished.begin(), result_.unfinished.end());
  return std::move(result_);
}

}  // namespace mallsim::sim
