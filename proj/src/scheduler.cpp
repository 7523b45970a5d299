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

#include "mallsim/scheduler.hpp"

#include <algorithm>
#include <iterator>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace mallsim::sched {

std::string_view to_string(Backfill b) { return b == Backfill::easy ? "easy" : "conservative"; }

Backfill backfill_from_string(std::string_view s) {
  if (s == "easy") return Backfill::easy;
  if (s == "conservative") return Backfill::conservative;
  throw std::invalid_argument("unknown backfill '" + std::string(s) + "'");
}

std::string_view to_string(Tiebreak t) {
  return t == Tiebreak::submit_order ? "submit_order" : "job_id";
}

Tiebreak tiebreak_from_string(std::string_view s) {
  if (s == "submit_order") return Tiebreak::submit_order;
  if (s == "job_id") return Tiebreak::job_id;
  throw std::invalid_argument("unknown tiebreak '" + std::string(s) + "'");
}

void SchedulerConfig::validate() const {
  if (!(aging_weight >= 0)) throw std::invalid_argument("aging_weight must be >= 0");
}

double PendingJob::priority(Seconds now, double aging_weight) const {
  return base_priority + aging_weight * static_cast<double>(now - submit_time);
}

Seconds PendingJob::estimate_for(int nodes) const {
  for (const auto& [n, t] : estimate) {
    if (n == nodes) return t;
  }
  throw std::logic_error("job " + std::to_string(id) + " has no run estimate for " +
                         std::to_string(nodes) + " nodes");
}

void order_pending(std::vector<PendingJob>& pending, Seconds now, const SchedulerConfig& cfg) {
  std::stable_sort(pending.begin(), pending.end(), [&](const PendingJob& a, const PendingJob& b) {
    if (a.boost_seq.has_value() != b.boost_seq.has_value()) return a.boost_seq.has_value();
    if (a.boost_seq && *a.boost_seq != *b.boost_seq) return *a.boost_seq > *b.boost_seq;
    const double pa = a.priority(now, cfg.aging_weight);
    const double pb = b.priority(now, cfg.aging_weight);
    if (pa != pb) return pa > pb;
    if (cfg.tiebreak == Tiebreak::submit_order && a.submit_order != b.submit_order) {
      return a.submit_order < b.submit_order;
    }
    return a.id < b.id;
  });
}

std::optional<int> start_size(const PendingJob& job, int available) {
  if (job.levels.empty()) {
    if (available < job.nodes_min) return std::nullopt;
    return std::min(job.nodes_max, available);
  }
  for (auto it = job.levels.rbegin(); it != job.levels.rend(); ++it) {
    if (*it >= job.nodes_min && *it <= job.nodes_max && *it <= available) return *it;
  }
  return std::nullopt;
}

namespace {

constexpr Seconds kNever = std::numeric_limits<Seconds>::max();

std::vector<StartDecision> easy_cycle(Seconds now, int free_nodes,
                                      std::span<const PendingJob> pending,
                                      std::span<const RunningView> running) {
  std::vector<StartDecision> starts;
  std::vector<RunningView> ends(running.begin(), running.end());
  int free = free_nodes;
  bool blocked = false;
  Seconds shadow = kNever;
  int extra = 0;

  for (const auto& job : pending) {
    if (!blocked) {
      if (auto s = start_size(job, free)) {
        starts.push_back({job.id, *s});
        ends.push_back({job.id, *s, now + job.estimate_for(*s)});
        free -= *s;
        continue;
      }
      // Reserve the earliest instant the blocked head can start.
      blocked = true;
      std::sort(ends.begin(), ends.end(), [](const RunningView& a, const RunningView& b) {
        return a.predicted_end < b.predicted_end || (a.predicted_end == b.predicted_end && a.id < b.id);
      });
      int avail = free;
      for (std::size_t i = 0; i < ends.size(); ++i) {
        avail += ends[i].nodes;
        const bool last_at_instant =
            i + 1 == ends.size() || ends[i + 1].predicted_end != ends[i].predicted_end;
        if (last_at_instant && avail >= job.nodes_min) {
          shadow = ends[i].predicted_end;
          extra = avail - job.nodes_min;
          break;
        }
      }
      continue;
    }
    auto s = start_size(job, free);
    if (!s) continue;
    if (now + job.estimate_for(*s) > shadow && *s > extra) {
      s = start_size(job, std::min(free, extra));
      if (!s) continue;
    }
    if (now + job.estimate_for(*s) > shadow) extra -= *s;
    free -= *s;
    starts.push_back({job.id, *s});
  }
  return starts;
}

// Free nodes as a step function of time, from `now` on.
class Profile {
 public:
  Profile(Seconds now, int free_nodes, std::span<const RunningView> running) : now_(now) {
    steps_[now] = free_nodes;
    std::map<Seconds, int> releases;
    for (const auto& r : running) releases[std::max(r.predicted_end, now)] += r.nodes;
    int level = free_nodes;
    for (const auto& [t, n] : releases) {
      level += n;
      steps_[t] = level;
    }
  }

  int min_free(Seconds from, Seconds to) const {
    auto it = std::prev(steps_.upper_bound(from));
    int lowest = it->second;
    for (++it; it != steps_.end() && it->first < to; ++it) lowest = std::min(lowest, it->second);
    return lowest;
  }

  Seconds earliest(int need, Seconds duration) const {
    for (const auto& [t, free] : steps_) {
      if (free >= need && min_free(t, t + duration) >= need) return t;
    }
    return kNever;
  }

  void reserve(Seconds from, Seconds duration, int nodes) {
    const Seconds to = from + duration;
    split(from);
    split(to);
    for (auto it = steps_.find(from); it != steps_.end() && it->first < to; ++it) it->second -= nodes;
  }

  Seconds now() const { return now_; }

 private:
  void split(Seconds t) {
    auto it = steps_.upper_bound(t);
    steps_.emplace(t, std::prev(it)->second);
  }

  Seconds now_;
  std::map<Seconds, int> steps_;
};

std::vector<StartDecision> conservative_cycle(Seconds now, int free_nodes,
                                              std::span<const PendingJob> pending,
                                              std::span<const RunningView> running) {
  std::vector<StartDecision> starts;
  Profile profile(now, free_nodes, running);
  for (const auto& job : pending) {
    // Largest size that can run from now without disturbing earlier reservations.
    int cap = profile.min_free(now, now + 1);
    bool started = false;
    while (auto s = start_size(job, cap)) {
      const Seconds d = job.estimate_for(*s);
      if (profile.min_free(now, now + d) >= *s) {
        profile.reserve(now, d, *s);
        starts.push_back({job.id, *s});
        started = true;
        break;
      }
      cap = *s - 1;
    }
    if (started) continue;
    auto s = start_size(job, job.nodes_min);
    if (!s) continue;
    const Seconds d = job.estimate_for(*s);
    const Seconds t = profile.earliest(*s, d);
    if (t != kNever) profile.reserve(t, d, *s);
  }
  return starts;
}

}  // namespace

int spare_nodes(Seconds now, int free_nodes, std::span<const PendingJob> pending,
                std::span<const RunningView> running) {
  const auto head = std::find_if(pending.begin(), pending.end(),
                                 [&](const PendingJob& p) { return p.nodes_min > free_nodes; });
  if (head == pending.end()) return free_nodes;
  std::vector<RunningView> ends(running.begin(), running.end());
  std::sort(ends.begin(), ends.end(), [](const RunningView& a, const RunningView& b) {
    return a.predicted_end < b.predicted_end || (a.predicted_end == b.predicted_end && a.id < b.id);
  });
  int avail = free_nodes;
  for (std::size_t i = 0; i < ends.size(); ++i) {
    avail += ends[i].nodes;
    const bool last_at_instant = i + 1 == ends.size() || ends[i + 1].predicted_end != ends[i].predicted_end;
    if (last_at_instant && avail >= head->nodes_min) return std::min(free_nodes, avail - head->nodes_min);
  }
  (void)now;
  return 0;
}

std::vector<StartDecision> schedule_cycle(Seconds now, int free_nodes,
                                          std::span<const PendingJob> pending,
                                          std::span<const RunningView> running,
                                          const SchedulerConfig& cfg) {
  if (cfg.backfill == Backfill::easy) return easy_cycle(now, free_nodes, pending, running);
  return conservative_cycle(now, free_nodes, pending, running);
}

}  // namespace mallsim::sched
