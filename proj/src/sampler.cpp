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

#include "mallsim/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <set>

#include <json.hpp>

namespace mallsim::sampling {

std::string_view to_string(LoadStatistic s) { return s == LoadStatistic::mean ? "mean" : "median"; }

LoadStatistic statistic_from_string(std::string_view s) {
  if (s == "mean" || s == "average") return LoadStatistic::mean;
  if (s == "median") return LoadStatistic::median;
  throw std::invalid_argument("unknown load statistic '" + std::string(s) + "'");
}

std::string_view to_string(DrawOutcome o) {
  switch (o) {
    case DrawOutcome::accepted:
      return "accepted";
    case DrawOutcome::rejected_oversize:
      return "rejected-oversize";
    case DrawOutcome::rejected_overshoot:
      return "rejected-overshoot";
  }
  return "?";
}

void SamplingSpec::validate() const {
  if (!(target_daily_load > 0)) throw std::invalid_argument("target daily load must be positive");
  if (platform_nodes < 1) throw std::invalid_argument("platform must have at least one node");
  if (!(band_low < 1.0 && 1.0 < band_high)) {
    throw std::invalid_argument("sampling band must satisfy low < 1 < high");
  }
}

std::map<UserId, std::vector<ingest::SwfJob>> group_by_user(const ingest::WorkloadLog& log) {
  std::map<UserId, std::vector<ingest::SwfJob>> groups;
  for (const auto& j : log.jobs) groups[j.user_id].push_back(j);
  return groups;
}

std::vector<double> daily_table(std::span<const UserId> users, const ingest::WorkloadLog& log) {
  const auto [first_day, ndays] = ingest::day_span(log);
  std::vector<double> table(static_cast<std::size_t>(std::max<std::int64_t>(ndays, 0)), 0.0);
  const std::set<UserId> wanted(users.begin(), users.end());
  for (const auto& j : log.jobs) {
    if (!wanted.count(j.user_id)) continue;
    const auto d = ingest::day_index(log, j.submit_time) - first_day;
    if (d < 0 || d >= ndays) continue;
    table[static_cast<std::size_t>(d)] += j.node_hours();
  }
  return table;
}

double reduce(std::span<const double> per_day, LoadStatistic statistic) {
  if (per_day.empty()) return 0.0;
  if (statistic == LoadStatistic::mean) {
    double sum = 0;
    for (double v : per_day) sum += v;
    return sum / static_cast<double>(per_day.size());
  }
  std::vector<double> sorted(per_day.begin(), per_day.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  return n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

double daily_load(std::span<const UserId> users, const ingest::WorkloadLog& log,
                  LoadStatistic statistic) {
  const auto table = daily_table(users, log);
  return reduce(table, statistic);
}

CandidateDrawer seeded_drawer(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](std::span<const UserId> remaining) -> std::size_t {
    const std::uint64_t n = remaining.size();
    // Rejection sampling keeps the draw unbiased and independent of the
    // standard library's distribution implementation.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = (*rng)();
      if (r >= threshold) return static_cast<std::size_t>(r % n);
    }
  };
}

SamplingResult sample_users(const ingest::WorkloadLog& log, const SamplingSpec& spec) {
  return sample_users(log, spec, seeded_drawer(spec.seed));
}

SamplingResult sample_users(const ingest::WorkloadLog& log, const SamplingSpec& spec,
                            const CandidateDrawer& draw) {
  spec.validate();
  if (log.jobs.empty()) throw std::invalid_argument("cannot sample users from an empty log");

  const auto [first_day, ndays] = ingest::day_span(log);
  const auto days = static_cast<std::size_t>(ndays);
  std::map<UserId, std::vector<double>> tables;
  std::map<UserId, int> largest;
  for (const auto& j : log.jobs) {
    auto& t = tables[j.user_id];
    if (t.empty()) t.assign(days, 0.0);
    const auto d = ingest::day_index(log, j.submit_time) - first_day;
    if (d >= 0 && d < ndays) t[static_cast<std::size_t>(d)] += j.node_hours();
    largest[j.user_id] = std::max(largest[j.user_id], j.nodes_requested);
  }

  const double low = spec.band_low * spec.target_daily_load;
  const double high = spec.band_high * spec.target_daily_load;
  auto in_band = [&](double m) { return low <= m && m <= high; };

  std::vector<UserId> remaining;
  std::vector<double> everyone(days, 0.0);
  for (const auto& [user, table] : tables) {
    remaining.push_back(user);
    if (largest[user] < spec.platform_nodes) {
      for (std::size_t d = 0; d < days; ++d) everyone[d] += table[d];
    }
  }
  // Adding users never lowers any day's total, so neither statistic can
  // exceed the value reached with every eligible user.
  if (reduce(everyone, spec.statistic) < low) {
    return SamplingFailed{UserPool{}, "target exceeds the load of all eligible users"};
  }

  UserPool pool;
  std::vector<double> pool_table(days, 0.0);
  std::vector<double> candidate(days, 0.0);
  double m = 0;
  while (!in_band(m)) {
    if (remaining.empty()) {
      std::sort(pool.users.begin(), pool.users.end());
      pool.achieved_load = m;
      return SamplingFailed{std::move(pool), "candidate users exhausted before reaching the band"};
    }
    const std::size_t idx = draw(remaining);
    if (idx >= remaining.size()) throw std::out_of_range("drawer returned an invalid index");
    const UserId u = remaining[idx];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(idx));

    if (largest[u] >= spec.platform_nodes) {
      pool.trace.push_back({u, DrawOutcome::rejected_oversize, m});
      continue;
    }
    const auto& t = tables[u];
    for (std::size_t d = 0; d < days; ++d) candidate[d] = pool_table[d] + t[d];
    const double next = reduce(candidate, spec.statistic);
    if (next > high) {
      pool.trace.push_back({u, DrawOutcome::rejected_overshoot, m});
      continue;
    }
    pool_table.swap(candidate);
    m = next;
    pool.users.push_back(u);
    pool.trace.push_back({u, DrawOutcome::accepted, m});
  }
  std::sort(pool.users.begin(), pool.users.end());
  pool.achieved_load = m;
  return pool;
}

ingest::WorkloadLog restrict_to_users(const ingest::WorkloadLog& log, std::span<const UserId> users) {
  const std::set<UserId> wanted(users.begin(), users.end());
  ingest::WorkloadLog out = log;
  out.jobs.clear();
  for (const auto& j : log.jobs) {
    if (wanted.count(j.user_id)) out.jobs.push_back(j);
  }
  return out;
}

void write_sidecar(std::ostream& out, const SamplingSpec& spec, const SamplingResult& result) {
  using nlohmann::json;
  const bool ok = std::holds_alternative<UserPool>(result);
  const UserPool& pool = ok ? std::get<UserPool>(result) : std::get<SamplingFailed>(result).best;
  json j;
  j["status"] = ok ? "ok" : "failed";
  if (!ok) j["reason"] = std::get<SamplingFailed>(result).reason;
  j["target_daily_load"] = spec.target_daily_load;
  j["platform_nodes"] = spec.platform_nodes;
  j["statistic"] = to_string(spec.statistic);
  j["band"] = {spec.band_low, spec.band_high};
  j["seed"] = spec.seed;
  j["users"] = pool.users;
  j["achieved_load"] = pool.achieved_load;
  json trace = json::array();
  for (const auto& r : pool.trace) {
    trace.push_back({{"user", r.user}, {"outcome", to_string(r.outcome)}, {"load", r.load}});
  }
  j["trace"] = trace;
  out << j.dump(2) << '\n';
}

}  // namespace mallsim::sampling
