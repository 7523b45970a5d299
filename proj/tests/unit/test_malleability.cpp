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
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "mallsim/malleability.hpp"

using namespace mallsim;
using namespace mallsim::malleability;

namespace {

// Model whose efficiency at every level is set explicitly.
AppModel with_efficiency(double eta) {
  AppModel m = AppModel::mpdata();
  m.pe_table.assign(m.level_set.size(), eta);
  return m;
}

PolicyConfig par_efficiency(int lo = 1, int hi = 64) {
  PolicyConfig p;
  p.kind = PolicyKind::par_efficiency;
  p.nodes_min = lo;
  p.nodes_max = hi;
  return p;
}

Progress at(int nodes, std::int64_t steps_done = 0) {
  Progress p = Progress::start(nodes, 1800, 0);
  p.steps_done = steps_done;
  p.syncs_since_reconfig = steps_done;
  return p;
}

}  // namespace

TEST_CASE("efficiency at one node is one") {
  CHECK(pe_of(AppModel::mpdata(), 1) == doctest::Approx(1.0));
}

TEST_CASE("efficiency stays at one through the linear region") {
  const auto m = AppModel::mpdata();
  for (int n : {2, 4, 8, 16}) {
    CHECK(speedup(m, n) == doctest::Approx(n));
    CHECK(pe_of(m, n) == doctest::Approx(1.0));
  }
}

TEST_CASE("1.42x speedup from 16 to 32 nodes gives efficiency 0.71 at 32") {
  const auto m = AppModel::mpdata();
  CHECK(speedup(m, 32) == doctest::Approx(22.72).epsilon(1e-3));
  CHECK(pe_of(m, 32) == doctest::Approx(0.71).epsilon(1e-3));
  CHECK_THROWS_AS(pe_of(m, 3), std::invalid_argument);
}

TEST_CASE("default model times and costs") {
  const auto m = AppModel::mpdata();
  CHECK(m.total_steps == 1800);
  CHECK(m.run_time(16) == 6660);  // 18.5 scaled hours
  CHECK(m.run_time(8) == 13320);
  CHECK(m.cost(2, 4) == 254);
  CHECK(m.cost(4, 8) == 135);
  CHECK(m.cost(8, 16) == 68);
  CHECK(m.cost(16, 32) == 36);
  CHECK(m.cost(32, 16) == 49);
  CHECK_THROWS_AS(m.cost(16, 64), std::invalid_argument);
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("run time never increases with more nodes") {
  const auto m = AppModel::mpdata();
  for (std::size_t i = 1; i < m.level_set.size(); ++i) {
    CHECK(m.run_time(m.level_set[i]) < m.run_time(m.level_set[i - 1]));
  }
}

TEST_CASE("model validation catches inconsistent tables") {
  AppModel m = AppModel::mpdata();
  m.reconfig_cost.erase({16, 32});
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = AppModel::mpdata();
  m.level_set = {1, 4, 2, 8, 16, 32, 64};
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = AppModel::mpdata();
  m.step_time_ms.pop_back();
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = with_efficiency(1.5);
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("shrink when a pending job fits and efficiency is below 0.85") {
  const std::vector<PendingView> pending{{42, 16}};
  const auto d = evaluate_policy({0, pending, {}}, at(32), par_efficiency(), with_efficiency(0.80));
  CHECK(d.action == Action::shrink);
  CHECK(d.target_nodes == 16);
  CHECK(d.boosted_pending_job == 42);
}

TEST_CASE("no shrink when efficiency is above 0.85") {
  // An expansion would fit too, but a fitting pending job rules it out.
  const std::vector<PendingView> pending{{42, 40}};
  const auto d = evaluate_policy({32, pending, {}}, at(32), par_efficiency(), with_efficiency(0.90));
  CHECK(d == ReconfigDecision{});
}

TEST_CASE("expand into free nodes when efficiency is above 0.10") {
  const auto d = evaluate_policy({32, {}, {}}, at(32), par_efficiency(), with_efficiency(0.50));
  CHECK(d.action == Action::expand);
  CHECK(d.target_nodes == 64);
  CHECK_FALSE(d.boosted_pending_job);
}

TEST_CASE("nothing to do without a fitting pending job or free nodes") {
  const std::vector<PendingView> pending{{7, 100}};
  CHECK(evaluate_policy({0, pending, {}}, at(16), par_efficiency(), with_efficiency(0.5)) == ReconfigDecision{});
}

TEST_CASE("the boosted job is the first fitting one in priority order") {
  // Job 3 needs more than a shrink frees, job 5 already fits in free nodes.
  const std::vector<PendingView> pending{{3, 40}, {5, 2}, {9, 10}, {11, 12}};
  const auto d = evaluate_policy({4, pending, {}}, at(32), par_efficiency(), AppModel::mpdata());
  CHECK(d.action == Action::shrink);
  CHECK(d.boosted_pending_job == 9);
}

TEST_CASE("shrink and expand stop at the policy limits") {
  const std::vector<PendingView> pending{{1, 8}};
  const auto m = with_efficiency(0.5);
  CHECK(evaluate_policy({0, pending, {}}, at(16), par_efficiency(16, 64), m) == ReconfigDecision{});
  CHECK(evaluate_policy({64, {}, {}}, at(32), par_efficiency(1, 32), m) == ReconfigDecision{});
  CHECK(evaluate_policy({64, {}, {}}, at(64), par_efficiency(1, 64), m) == ReconfigDecision{});
}

TEST_CASE("expansion honours the expandable-node cap") {
  const auto m = with_efficiency(0.5);
  CHECK(evaluate_policy({32, {}, 31}, at(32), par_efficiency(), m) == ReconfigDecision{});
  CHECK(evaluate_policy({32, {}, 32}, at(32), par_efficiency(), m).action == Action::expand);
}

TEST_CASE("always-grow expands whenever it can and never shrinks") {
  PolicyConfig grow;
  grow.kind = PolicyKind::always_grow;
  grow.nodes_max = 64;
  const auto m = AppModel::mpdata();
  CHECK(evaluate_policy({1, {}, {}}, at(1), grow, m).target_nodes == 2);
  CHECK(evaluate_policy({15, {}, {}}, at(16), grow, m) == ReconfigDecision{});

  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const int nodes = m.level_set[rng() % m.level_set.size()];
    std::vector<PendingView> pending;
    for (int k = static_cast<int>(rng() % 4); k > 0; --k) {
      pending.push_back({k, 1 + static_cast<int>(rng() % 64)});
    }
    const auto d = evaluate_policy({static_cast<int>(rng() % 80), pending, {}}, at(nodes), grow,
                                   with_efficiency(static_cast<double>(rng() % 101) / 100.0));
    CHECK(d.action != Action::shrink);
    CHECK_FALSE(d.boosted_pending_job);
  }
}

TEST_CASE("a no-op policy never reconfigures") {
  PolicyConfig none;
  none.nodes_max = 64;
  const std::vector<PendingView> pending{{1, 8}};
  CHECK(evaluate_policy({64, pending, {}}, at(16), none, with_efficiency(0.05)) == ReconfigDecision{});
}

TEST_CASE("decisions stay one level away and inside the limits") {
  std::mt19937_64 rng(17);
  const auto base = AppModel::mpdata();
  for (int i = 0; i < 5000; ++i) {
    const int lo = base.level_set[rng() % 4];
    const int hi = base.level_set[3 + rng() % 4];
    const int nodes = base.level_set[rng() % base.level_set.size()];
    if (nodes < lo || nodes > hi) continue;
    std::vector<PendingView> pending;
    for (int k = static_cast<int>(rng() % 5); k > 0; --k) pending.push_back({k, 1 + static_cast<int>(rng() % 70)});
    const int free = static_cast<int>(rng() % 70);
    const auto d = evaluate_policy({free, pending, {}}, at(nodes), par_efficiency(lo, hi),
                                   with_efficiency(static_cast<double>(rng() % 101) / 100.0));
    if (d.action == Action::none) continue;
    const auto idx = base.level_index(nodes);
    REQUIRE(d.target_nodes);
    CHECK(*d.target_nodes >= lo);
    CHECK(*d.target_nodes <= hi);
    if (d.action == Action::expand) {
      CHECK(*d.target_nodes == base.level_set[idx + 1]);
      CHECK(*d.target_nodes - nodes <= free);
    } else {
      CHECK(*d.target_nodes == base.level_set[idx - 1]);
      REQUIRE(d.boosted_pending_job);
    }
  }
}

TEST_CASE("iteration inhibitor holds a 32-node job for 32 sync points") {
  PolicyConfig p = par_efficiency();
  p.iteration_inhibitor = true;
  const auto m = AppModel::mpdata();
  const ReconfigDecision shrink{Action::shrink, 16, 1};
  auto job = at(32, 10);
  auto v = inhibitor_check(job, p, m, shrink);
  CHECK_FALSE(v.allowed);
  CHECK(v.reason.find("iteration inhibitor") != std::string::npos);
  job.syncs_since_reconfig = 32;
  CHECK(inhibitor_check(job, p, m, shrink).allowed);
  p.iterations_per_node = 2;
  CHECK_FALSE(inhibitor_check(job, p, m, shrink).allowed);
}

TEST_CASE("cost inhibitor vetoes moves above the cap") {
  PolicyConfig p = par_efficiency();
  p.cost_inhibitor = 300;
  const auto m = AppModel::mpdata();
  const auto v = inhibitor_check(at(2, 100), p, m, {Action::shrink, 1, 3});
  CHECK_FALSE(v.allowed);
  CHECK(v.reason.find("cost inhibitor") != std::string::npos);
  CHECK_FALSE(inhibitor_check(at(1, 100), p, m, {Action::expand, 2, {}}).allowed);
  CHECK(inhibitor_check(at(16, 100), p, m, {Action::expand, 32, {}}).allowed);
  CHECK(inhibitor_check(at(2, 100), p, m, {Action::expand, 4, {}}).allowed);
  CHECK(inhibitor_check(at(16, 0), p, m, {}).allowed);
}

TEST_CASE("expanding 16 to 32 halfway leaves cost plus 900 steps at 32") {
  const auto m = AppModel::mpdata();
  Progress p = Progress::start(16, 1800, 0);
  for (int i = 0; i < 900; ++i) {
    CHECK(next_sync_time(p, m) == (static_cast<std::int64_t>(i + 1) * 3700 + 999) / 1000);
    record_sync(p);
  }
  const Seconds now = 3330;
  reconfigure(p, 32, now, m.cost(16, 32));
  // Remaining: 36 s pause plus 900 x 2.606 s, rounded up once per phase.
  CHECK(projected_end(p, m) == now + 36 + 2346);
  CHECK(p.overhead == 36);
  CHECK(p.reconfigurations == 1);
  CHECK(p.syncs_since_reconfig == 0);
  CHECK(next_sync_time(p, m) == now + 36 + 3);
}

TEST_CASE("a constant-size run completes exactly 1800 iterations") {
  const auto m = AppModel::mpdata();
  Progress p = Progress::start(16, 1800, 0);
  Seconds last = 0;
  int syncs = 0;
  while (p.steps_done < p.total_steps) {
    const Seconds t = next_sync_time(p, m);
    CHECK(t >= last);
    last = t;
    record_sync(p);
    ++syncs;
  }
  CHECK(syncs == 1800);
  CHECK(last == m.run_time(16));
  const auto r = remaining_work_accounting(p);
  CHECK(r.remaining_steps == 0);
  CHECK(r.sync_count == 1800);
}

TEST_CASE("iterations before and after a reconfiguration add up") {
  const auto m = AppModel::mpdata();
  Progress p = Progress::start(8, 1800, 0);
  for (int i = 0; i < 700; ++i) record_sync(p);
  reconfigure(p, 16, 5200, m.cost(8, 16));
  std::int64_t after = 0;
  while (p.steps_done < p.total_steps) {
    record_sync(p);
    ++after;
  }
  CHECK(700 + after == 1800);
  const auto r = remaining_work_accounting(p);
  CHECK(r.steps_done == 1800);
  CHECK(r.reconfigurations == 1);
  CHECK(r.overhead == 68);
}

TEST_CASE("ledger CSV round trip") {
  const std::vector<LedgerEntry> ledger{{7, 16, 32, 36, 100}, {7, 32, 16, 49, 900}};
  std::stringstream s;
  write_ledger_csv(s, ledger);
  CHECK(s.str() == "job_id,from,to,cost_s,t\n7,16,32,36,100\n7,32,16,49,900\n");
  CHECK(read_ledger_csv(s) == ledger);
  std::istringstream bad("id,a\n");
  CHECK_THROWS(read_ledger_csv(bad));
}

TEST_CASE("policy names and validation") {
  CHECK(policy_kind_from_string("always_grow") == PolicyKind::always_grow);
  CHECK(to_string(PolicyKind::par_efficiency) == "par_efficiency");
  CHECK(to_string(Action::expand) == "EXPAND");
  CHECK_THROWS(policy_kind_from_string("greedy"));
  PolicyConfig p = par_efficiency();
  p.pe_expand_threshold = 0.9;
  CHECK_THROWS(p.validate());
  p = par_efficiency();
  p.iterations_per_node = 0;
  CHECK_THROWS(p.validate());
}
