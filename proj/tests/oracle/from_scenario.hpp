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
// Builds oracle inputs from a loaded scenario so both simulators replay the
// same prepared workload.

#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <vector>

#include "mallsim/scenario.hpp"
#include "naive_sim.hpp"

namespace oracle {

struct Inputs {
  Config cfg;
  std::vector<Submission> log;
  std::vector<FeedbackUser> users;
  // Owned model copies the jobs point into.
  std::vector<std::unique_ptr<App>> apps;
  std::vector<std::unique_ptr<Policy>> policies;
};

inline App to_oracle(const mallsim::malleability::AppModel& m) {
  App a;
  a.levels = m.level_set;
  a.step_ms = m.step_time_ms;
  a.steps = m.total_steps;
  for (const auto& [k, v] : m.reconfig_cost) a.cost[k] = v;
  a.pe = m.pe_table;
  return a;
}

inline Policy to_oracle(const mallsim::malleability::PolicyConfig& p) {
  using mallsim::malleability::PolicyKind;
  Policy o;
  o.kind = p.kind == PolicyKind::always_grow      ? Rule::grow
           : p.kind == PolicyKind::par_efficiency ? Rule::efficiency
                                                  : Rule::none;
  o.shrink_below = p.pe_shrink_threshold;
  o.expand_above = p.pe_expand_threshold;
  o.iteration_hold = p.iteration_inhibitor;
  o.iterations_per_node = p.iterations_per_node;
  o.cost_cap = p.cost_inhibitor;
  o.min = p.nodes_min;
  o.max = p.nodes_max;
  return o;
}

inline Config to_oracle(const mallsim::sim::SimConfig& c) {
  Config o;
  o.nodes = c.total_nodes;
  o.easy = c.scheduler.backfill == mallsim::sched::Backfill::easy;
  o.aging = c.scheduler.aging_weight;
  o.by_submit_order = c.scheduler.tiebreak == mallsim::sched::Tiebreak::submit_order;
  o.spare_only = c.reservation_aware_expansion;
  o.trace_syncs = c.trace_syncs;
  o.horizon = c.horizon;
  return o;
}

inline Inputs inputs_for(const mallsim::scenario::Scenario& s, const mallsim::ingest::WorkloadLog& log) {
  Inputs in;
  in.cfg = to_oracle(s.sim);
  i64 next_id = 1;
  for (const auto& j : log.jobs) {
    Submission sub;
    sub.t = j.submit_time;
    sub.job.id = j.job_id;
    sub.job.owner = j.user_id;
    sub.job.nodes_min = sub.job.nodes_max = j.nodes_requested;
    sub.job.run_time = j.run_time;
    in.log.push_back(sub);
    next_id = std::max(next_id, j.job_id + 1);
  }
  for (const auto& spec : s.users) {
    FeedbackUser u;
    u.user = spec.user;
    u.t0 = mallsim::submit::warmup_gate(spec, s.warmup_end);
    u.think = spec.think_time;
    u.count = spec.count;
    u.first_id = spec.first_job_id > 0 ? spec.first_job_id : next_id;
    next_id = std::max(next_id, u.first_id + spec.count);
    const auto& tpl = spec.job_template;
    in.apps.push_back(std::make_unique<App>(to_oracle(*tpl.app)));
    u.tmpl.app = in.apps.back().get();
    if (tpl.policy) {
      in.policies.push_back(std::make_unique<Policy>(to_oracle(*tpl.policy)));
      u.tmpl.policy = in.policies.back().get();
    }
    u.tmpl.nodes_min = tpl.nodes_min;
    u.tmpl.nodes_max = tpl.nodes_max;
    u.tmpl.walltime = tpl.walltime;
    in.users.push_back(u);
  }
  return in;
}

}  // namespace oracle
