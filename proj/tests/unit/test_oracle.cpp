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
#include <doctest.h>

#include "naive_sim.hpp"

using namespace oracle;
using mallsim::trace::Kind;

namespace {

Job rigid(i64 id, int nodes, i64 run, std::optional<i64> walltime = std::nullopt) {
  Job j;
  j.id = id;
  j.owner = 1;
  j.nodes_min = j.nodes_max = nodes;
  j.run_time = run;
  j.walltime = walltime;
  return j;
}

std::map<i64, i64> starts(const Outcome& o) {
  std::map<i64, i64> s;
  for (const auto& r : o.trace.records)
    if (r.kind == Kind::start) s[r.job] = r.t;
  return s;
}

}  // namespace

TEST_CASE("easy backfill by hand") {
  // 4 nodes. Job 1 holds 3 until 10; job 2 needs 4 and reserves t = 10.
  // Job 3 (1 node, 5 s) fits before the reservation; job 4 (1 node, 50 s)
  // would delay it.
  Config cfg;
  cfg.nodes = 4;
  const auto o = simulate(cfg,
                          {{0, rigid(1, 3, 10)}, {1, rigid(2, 4, 10)}, {2, rigid(3, 1, 5)}, {3, rigid(4, 1, 50)}},
                          {});
  const auto s = starts(o);
  CHECK(s.at(1) == 0);
  CHECK(s.at(3) == 2);
  CHECK(s.at(2) == 10);
  CHECK(s.at(4) == 20);
}

TEST_CASE("conservative backfill protects every reservation by hand") {
  // Job 2 needs 2 nodes at 10, job 4 all 4 nodes after it. The long 1-node
  // job 3 fits beside job 2's reservation but overlaps job 4's.
  const std::vector<Submission> log = {
      {0, rigid(1, 3, 10)}, {1, rigid(2, 2, 10)}, {2, rigid(4, 4, 10)}, {3, rigid(3, 1, 100)}};
  Config cfg;
  cfg.nodes = 4;
  cfg.aging = 0;
  const auto easy = starts(simulate(cfg, log, {}));
  CHECK(easy.at(3) == 3);
  CHECK(easy.at(2) == 10);
  CHECK(easy.at(4) == 103);
  cfg.easy = false;
  const auto cons = starts(simulate(cfg, log, {}));
  CHECK(cons.at(2) == 10);
  CHECK(cons.at(4) == 20);
  CHECK(cons.at(3) == 30);
}

TEST_CASE("walltime drives the reservation") {
  // Job 1 declares 100 s but runs 10; job 3 is admitted against the
  // declared end and starts at once.
  Config cfg;
  cfg.nodes = 2;
  const auto o = simulate(cfg, {{0, rigid(1, 1, 10, 100)}, {1, rigid(2, 2, 5)}, {2, rigid(3, 1, 60)}}, {});
  const auto s = starts(o);
  CHECK(s.at(3) == 2);
  CHECK(s.at(2) == 62);
}

TEST_CASE("growing application by hand") {
  App app;
  app.levels = {1, 2};
  app.step_ms = {2000, 1000};
  app.steps = 10;
  app.cost = {{{1, 2}, 3}, {{2, 1}, 3}};
  Policy grow;
  grow.kind = Rule::grow;
  grow.min = 1;
  grow.max = 2;
  Job m;
  m.id = 2;
  m.nodes_min = 1;
  m.nodes_max = 2;
  m.app = &app;
  m.policy = &grow;
  Config cfg;
  cfg.nodes = 2;
  const auto o = simulate(cfg, {{0, rigid(1, 1, 3)}, {0, m}}, {});
  // One node from 0; step syncs at 2 and 4; the second node frees at 3, so
  // the sync at 4 expands, pausing 3 s; 8 steps at 1 s remain.
  std::vector<std::tuple<i64, Kind, int>> got;
  for (const auto& r : o.trace.records)
    if (r.job == 2 && r.kind != Kind::submit) got.emplace_back(r.t, r.kind, r.nodes);
  CHECK(got == std::vector<std::tuple<i64, Kind, int>>{{0, Kind::start, 1}, {4, Kind::reconfig, 2}, {15, Kind::end, 2}});
}

TEST_CASE("feedback user by hand") {
  App app;
  app.levels = {1};
  app.step_ms = {1000};
  app.steps = 30;
  FeedbackUser u;
  u.user = 5;
  u.t0 = 10;
  u.think = 7;
  u.count = 3;
  u.first_id = 100;
  u.tmpl.app = &app;
  Config cfg;
  cfg.nodes = 1;
  const auto o = simulate(cfg, {}, {u});
  REQUIRE(o.submissions.size() == 1);
  CHECK(o.submissions[0] == std::vector<i64>{10, 47, 84});
}
