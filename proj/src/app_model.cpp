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

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mallsim/malleability.hpp"

namespace mallsim::malleability {

void AppModel::validate() const {
  if (level_set.empty()) throw std::invalid_argument("app model '" + name + "' has no levels");
  if (step_time_ms.size() != level_set.size()) {
    throw std::invalid_argument("app model '" + name + "': one step time per level required");
  }
  if (total_steps < 1) throw std::invalid_argument("app model '" + name + "': total_steps < 1");
  for (std::size_t i = 0; i < level_set.size(); ++i) {
    if (level_set[i] < 1 || (i > 0 && level_set[i] <= level_set[i - 1])) {
      throw std::invalid_argument("app model '" + name + "': levels must be positive and ascending");
    }
    if (step_time_ms[i] < 1) {
      throw std::invalid_argument("app model '" + name + "': step times must be positive");
    }
  }
  for (std::size_t i = 0; i + 1 < level_set.size(); ++i) {
    for (auto key : {std::pair{level_set[i], level_set[i + 1]}, std::pair{level_set[i + 1], level_set[i]}}) {
      auto it = reconfig_cost.find(key);
      if (it == reconfig_cost.end()) {
        throw std::invalid_argument("app model '" + name + "': missing reconfiguration cost " +
                                    std::to_string(key.first) + "->" + std::to_string(key.second));
      }
      if (it->second < 0) throw std::invalid_argument("app model '" + name + "': negative cost");
    }
  }
  if (!pe_table.empty() && pe_table.size() != level_set.size()) {
    throw std::invalid_argument("app model '" + name + "': one efficiency per level required");
  }
  for (int n : level_set) {
    const double e = pe_of(*this, n);
    if (e < 0.0 || e > 1.0 + 1e-9) {
      throw std::invalid_argument("app model '" + name + "': efficiency at " + std::to_string(n) +
                                  " nodes is outside [0, 1]");
    }
  }
}

bool AppModel::has_level(int nodes) const {
  return std::binary_search(level_set.begin(), level_set.end(), nodes);
}

std::size_t AppModel::level_index(int nodes) const {
  auto it = std::lower_bound(level_set.begin(), level_set.end(), nodes);
  if (it == level_set.end() || *it != nodes) {
    throw std::invalid_argument(std::to_string(nodes) + " nodes is not a level of app model '" +
                                name + "'");
  }
  return static_cast<std::size_t>(it - level_set.begin());
}

std::int64_t AppModel::step_ms(int nodes) const { return step_time_ms[level_index(nodes)]; }

Seconds AppModel::compute_time(int nodes, std::int64_t steps) const {
  return ceil_div(steps * step_ms(nodes), 1000);
}

Seconds AppModel::cost(int from, int to) const {
  auto it = reconfig_cost.find({from, to});
  if (it == reconfig_cost.end()) {
    throw std::invalid_argument("no reconfiguration cost for " + std::to_string(from) + "->" +
                                std::to_string(to));
  }
  return it->second;
}

std::optional<int> AppModel::level_above(int nodes, int limit) const {
  auto it = std::upper_bound(level_set.begin(), level_set.end(), nodes);
  if (it == level_set.end() || *it > limit) return std::nullopt;
  return *it;
}

std::optional<int> AppModel::level_below(int nodes, int limit) const {
  auto it = std::lower_bound(level_set.begin(), level_set.end(), nodes);
  if (it == level_set.begin()) return std::nullopt;
  --it;
  if (*it < limit) return std::nullopt;
  return *it;
}

std::optional<int> AppModel::largest_fitting(int lo, int hi, int available) const {
  for (auto it = level_set.rbegin(); it != level_set.rend(); ++it) {
    if (*it >= lo && *it <= hi && *it <= available) return *it;
  }
  return std::nullopt;
}

AppModel AppModel::mpdata() {
  AppModel m;
  m.name = "mpdata";
  m.level_set = {1, 2, 4, 8, 16, 32, 64};
  // 16 nodes: 18.5 scaled hours = 6,660 s over 1,800 steps = 3.7 s/step.
  const std::int64_t at16 = 3700;
  for (int n : {1, 2, 4, 8, 16}) m.step_time_ms.push_back(at16 * 16 / n);
  m.step_time_ms.push_back(std::llround(at16 / 1.42));        // 2606
  m.step_time_ms.push_back(std::llround(at16 / (1.42 * 1.2)));  // 2171
  m.total_steps = 1800;
  m.reconfig_cost = {
      {{1, 2}, 420},  {{2, 4}, 254},  {{4, 8}, 135},  {{8, 16}, 68},
      {{16, 32}, 36}, {{32, 64}, 20}, {{2, 1}, 390},  {{4, 2}, 250},
      {{8, 4}, 140},  {{16, 8}, 90},  {{32, 16}, 49}, {{64, 32}, 40},
  };
  return m;
}

double speedup(const AppModel& model, int nodes) {
  const int base = model.level_set.front();
  return static_cast<double>(base) * static_cast<double>(model.step_time_ms.front()) /
         static_cast<double>(model.step_ms(nodes));
}

double pe_of(const AppModel& model, int nodes) {
  const auto idx = model.level_index(nodes);
  if (!model.pe_table.empty()) return model.pe_table[idx];
  return speedup(model, nodes) / static_cast<double>(nodes);
}

Progress Progress::start(int nodes, std::int64_t total_steps, Seconds now) {
  Progress p;
  p.nodes = nodes;
  p.total_steps = total_steps;
  p.phase_origin = now;
  return p;
}

Seconds next_sync_time(const Progress& job, const AppModel& model) {
  return job.phase_origin + model.compute_time(job.nodes, job.steps_done + 1 - job.phase_origin_steps);
}

Seconds projected_end(const Progress& job, const AppModel& model) {
  return job.phase_origin + model.compute_time(job.nodes, job.total_steps - job.phase_origin_steps);
}

void record_sync(Progress& job) {
  ++job.steps_done;
  ++job.sync_count;
  ++job.syncs_since_reconfig;
}

void reconfigure(Progress& job, int target, Seconds now, Seconds cost) {
  job.nodes = target;
  job.phase_origin = now + cost;
  job.phase_origin_steps = job.steps_done;
  job.syncs_since_reconfig = 0;
  job.reconfigurations += 1;
  job.overhead += cost;
}

ProgressRecord remaining_work_accounting(const Progress& job) {
  return {job.steps_done, job.total_steps - job.steps_done, job.sync_count,
          job.syncs_since_reconfig, job.reconfigurations, job.overhead};
}

void write_ledger_csv(std::ostream& out, std::span<const LedgerEntry> ledger) {
  out << "job_id,from,to,cost_s,t\n";
  for (const auto& e : ledger) {
    out << e.job << ',' << e.from << ',' << e.to << ',' << e.cost << ',' << e.t << '\n';
  }
}

std::vector<LedgerEntry> read_ledger_csv(std::istream& in) {
  std::vector<LedgerEntry> ledger;
  std::string line;
  if (!std::getline(in, line) || line != "job_id,from,to,cost_s,t") {
    throw std::runtime_error("reconfiguration ledger: unexpected header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    LedgerEntry e;
    if (!(row >> e.job >> e.from >> e.to >> e.cost >> e.t)) {
      throw std::runtime_error("reconfiguration ledger: malformed row");
    }
    ledger.push_back(e);
  }
  return ledger;
}

}  // namespace mallsim::malleability
