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

#include "mallsim/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

namespace mallsim::metrics {

using nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

double JobRecord::node_hours() const {
  Seconds node_seconds = 0;
  for (const auto& p : phases) node_seconds += static_cast<Seconds>(p.nodes) * (p.end - p.start);
  return static_cast<double>(node_seconds) / 3600.0;
}

std::string JobRecord::nodes_profile() const {
  std::string s;
  for (const auto& p : phases) {
    if (!s.empty()) s += '>';
    s += std::to_string(p.nodes);
  }
  return s;
}

std::vector<JobRecord> job_records(const trace::Trace& trace) {
  std::vector<JobRecord> jobs;
  std::map<JobId, std::size_t> index;
  Seconds last = 0;
  for (const auto& r : trace.records) last = std::max(last, r.t);
  auto find = [&](const trace::Record& r) -> JobRecord& {
    auto it = index.find(r.job);
    if (it == index.end()) {
      throw trace::TraceError("trace record for job " + std::to_string(r.job) + " before its submission");
    }
    return jobs[it->second];
  };
  for (const auto& r : trace.records) {
    switch (r.kind) {
      case trace::Kind::submit: {
        JobRecord j;
        j.id = r.job;
        j.cls = job_class_from_string(r.detail.at("class").get<std::string>());
        j.user = r.detail.at("user").get<UserId>();
        j.submit = r.t;
        index[r.job] = jobs.size();
        jobs.push_back(std::move(j));
        break;
      }
      case trace::Kind::start: {
        auto& j = find(r);
        j.start = r.t;
        j.phases.push_back({r.t, r.t, r.nodes});
        break;
      }
      case trace::Kind::reconfig: {
        auto& j = find(r);
        j.phases.back().end = r.t;
        j.phases.push_back({r.t, r.t, r.nodes});
        ++j.reconfigurations;
        break;
      }
      case trace::Kind::end: {
        auto& j = find(r);
        j.phases.back().end = r.t;
        j.end = r.t;
        break;
      }
      case trace::Kind::sync:
      case trace::Kind::reject:
        break;
    }
  }
  // Jobs cut off by a horizon hold their allocation to the last recorded instant.
  for (auto& j : jobs) {
    if (j.start && !j.end) j.phases.back().end = last;
  }
  return jobs;
}

std::vector<TimelineSample> allocation_timeline(const trace::Trace& trace) {
  Seconds last = 0;
  for (const auto& r : trace.records) last = std::max(last, r.t);
  const auto jobs = job_records(trace);
  std::vector<std::int64_t> base(static_cast<std::size_t>(last) + 1, 0);
  std::vector<std::int64_t> gen(base.size(), 0);
  for (const auto& j : jobs) {
    auto& diff = j.cls == JobClass::baseline ? base : gen;
    for (const auto& p : j.phases) {
      diff[static_cast<std::size_t>(p.start)] += p.nodes;
      diff[static_cast<std::size_t>(p.end)] -= p.nodes;
    }
  }
  std::vector<TimelineSample> out;
  out.reserve(static_cast<std::size_t>(last));
  std::int64_t b = 0, g = 0;
  for (Seconds t = 0; t < last; ++t) {
    b += base[static_cast<std::size_t>(t)];
    g += gen[static_cast<std::size_t>(t)];
    out.push_back({t, static_cast<int>(b + g), static_cast<int>(b), static_cast<int>(g)});
  }
  return out;
}

MeanStd mean_std(std::span<const double> xs) {
  if (xs.empty()) return {};
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

MeanStd allocation_stats(std::span<const TimelineSample> timeline, int total_nodes, Seconds warmup_end) {
  if (warmup_end < 0 || static_cast<std::size_t>(warmup_end) >= timeline.size()) {
    throw std::invalid_argument("warm-up end " + std::to_string(warmup_end) +
                                " leaves no samples before the end of the run");
  }
  std::vector<double> frac;
  frac.reserve(timeline.size() - static_cast<std::size_t>(warmup_end));
  for (std::size_t i = static_cast<std::size_t>(warmup_end); i < timeline.size(); ++i) {
    frac.push_back(static_cast<double>(timeline[i].total) / total_nodes);
  }
  return mean_std(frac);
}

WaitStats waiting_stats(std::span<const JobRecord> jobs, std::optional<JobClass> cls) {
  WaitStats s;
  std::vector<double> waits;
  double acc = 0;
  for (const auto& j : jobs) {
    if (!j.start || (cls && j.cls != *cls)) continue;
    waits.push_back(static_cast<double>(j.wait()));
    acc += waits.back();
    s.accumulated.push_back(acc);
  }
  const auto ms = mean_std(waits);
  s.count = waits.size();
  s.avg = ms.avg;
  s.std = ms.std;
  return s;
}

UnmatchedJobs::UnmatchedJobs(std::vector<JobId> unmatched)
    : std::runtime_error([&] {
        std::string msg = "jobs not present in both traces:";
        for (auto id : unmatched) msg += " " + std::to_string(id);
        return msg;
      }()),
      ids(std::move(unmatched)) {}

std::vector<WaitDiff> wait_diffs(std::span<const JobRecord> jobs, std::span<const JobRecord> reference) {
  std::map<JobId, const JobRecord*> mine;
  for (const auto& j : jobs) {
    if (j.cls == JobClass::baseline) mine[j.id] = &j;
  }
  std::vector<WaitDiff> out;
  std::vector<JobId> unmatched;
  std::set<JobId> matched;
  for (const auto& r : reference) {
    if (r.cls != JobClass::baseline) continue;
    auto it = mine.find(r.id);
    if (it == mine.end() || !it->second->start || !r.start) {
      unmatched.push_back(r.id);
      continue;
    }
    matched.insert(r.id);
    out.push_back({r.id, it->second->wait(), r.wait(), it->second->wait() - r.wait()});
  }
  for (const auto& [id, j] : mine) {
    if (!matched.count(id) && std::find(unmatched.begin(), unmatched.end(), id) == unmatched.end()) {
      unmatched.push_back(id);
    }
  }
  if (!unmatched.empty()) {
    std::sort(unmatched.begin(), unmatched.end());
    throw UnmatchedJobs(std::move(unmatched));
  }
  return out;
}

std::optional<Seconds> makespan(std::span<const JobRecord> jobs, std::optional<JobClass> cls) {
  std::optional<Seconds> m;
  for (const auto& j : jobs) {
    if (!j.end || (cls && j.cls != *cls)) continue;
    m = std::max(m.value_or(0), *j.end);
  }
  return m;
}

std::optional<Seconds> makespan_of_users(std::span<const JobRecord> jobs, std::span<const UserId> users) {
  std::optional<Seconds> m;
  for (const auto& j : jobs) {
    if (!j.end || std::find(users.begin(), users.end(), j.user) == users.end()) continue;
    m = std::max(m.value_or(0), *j.end);
  }
  return m;
}

double ReconfigSummary::avg_expand() const {
  return expansions ? static_cast<double>(expand_overhead) / expansions : 0.0;
}
double ReconfigSummary::avg_shrink() const {
  return shrinkages ? static_cast<double>(shrink_overhead) / shrinkages : 0.0;
}
double ReconfigSummary::avg() const {
  return total() ? static_cast<double>(overhead()) / total() : 0.0;
}

ReconfigSummary reconfig_summary(std::span<const malleability::LedgerEntry> ledger) {
  ReconfigSummary s;
  for (const auto& e : ledger) {
    if (e.to > e.from) {
      ++s.expansions;
      s.expand_overhead += e.cost;
    } else {
      ++s.shrinkages;
      s.shrink_overhead += e.cost;
    }
  }
  return s;
}

std::vector<malleability::LedgerEntry> ledger_from_trace(const trace::Trace& trace) {
  std::vector<malleability::LedgerEntry> out;
  for (const auto& r : trace.records) {
    if (r.kind != trace::Kind::reconfig) continue;
    out.push_back({r.job, r.detail.at("from").get<int>(), r.detail.at("to").get<int>(),
                   r.detail.at("cost").get<Seconds>(), r.t});
  }
  return out;
}

NodesPerDay nodes_per_day(std::span<const TimelineSample> timeline, int total_nodes, Seconds window_start,
                          Seconds window_end, Seconds day_seconds) {
  if (window_end <= window_start) throw std::invalid_argument("empty consumption window");
  if (day_seconds < 1) throw std::invalid_argument("day length must be positive");
  NodesPerDay out;
  out.window_start = window_start;
  out.window_end = window_end;
  out.day_seconds = day_seconds;
  std::int64_t base_total = 0, gen_total = 0;
  for (Seconds d = window_start; d < window_end; d += day_seconds) {
    const Seconds e = std::min(d + day_seconds, window_end);
    std::int64_t b = 0, g = 0;
    for (Seconds t = d; t < e && static_cast<std::size_t>(t) < timeline.size(); ++t) {
      b += timeline[static_cast<std::size_t>(t)].baseline;
      g += timeline[static_cast<std::size_t>(t)].generative;
    }
    base_total += b;
    gen_total += g;
    const double len = static_cast<double>(e - d);
    out.days.push_back({d, e - d, static_cast<double>(b) / len, static_cast<double>(g) / len});
  }
  const double span = static_cast<double>(window_end - window_start);
  const double area = span * total_nodes;
  out.baseline = static_cast<double>(base_total) / span;
  out.generative = static_cast<double>(gen_total) / span;
  out.accumulated = static_cast<double>(base_total + gen_total) / span;
  out.available = total_nodes;
  out.baseline_pct = 100.0 * static_cast<double>(base_total) / area;
  out.generative_pct = 100.0 * static_cast<double>(gen_total) / area;
  out.accumulated_pct = 100.0 * static_cast<double>(base_total + gen_total) / area;
  return out;
}

std::pair<Seconds, Seconds> generative_window(std::span<const JobRecord> jobs) {
  std::optional<Seconds> first, last;
  Seconds end_all = 0;
  for (const auto& j : jobs) {
    if (j.end) end_all = std::max(end_all, *j.end);
    if (j.cls != JobClass::generative) continue;
    first = std::min(first.value_or(j.submit), j.submit);
    if (j.end) last = std::max(last.value_or(0), *j.end);
  }
  if (first && last && *last > *first) return {*first, *last};
  return {0, end_all};
}

namespace {

ClassWait class_wait(std::span<const JobRecord> jobs, std::optional<JobClass> cls) {
  const auto w = waiting_stats(jobs, cls);
  return {w.count, w.avg, w.std};
}

}  // namespace

MetricsSummary summarize(const trace::Trace& trace, const ReportOptions& options) {
  MetricsSummary s;
  s.total_nodes = trace.total_nodes;
  s.warmup_end = options.warmup_end;
  const auto jobs = job_records(trace);
  for (const auto& r : trace.records) {
    if (r.kind == trace::Kind::reject) ++s.rejected;
  }
  s.submitted = jobs.size();
  const auto timeline = allocation_timeline(trace);
  s.makespan_complete = makespan(jobs).value_or(0);
  s.makespan_baseline = makespan(jobs, JobClass::baseline);
  s.makespan_generative = makespan(jobs, JobClass::generative);
  if (static_cast<std::size_t>(std::max<Seconds>(options.warmup_end, 0)) < timeline.size()) {
    s.alloc_rate = allocation_stats(timeline, trace.total_nodes, options.warmup_end);
  }
  s.wait_baseline = class_wait(jobs, JobClass::baseline);
  s.wait_generative = class_wait(jobs, JobClass::generative);
  s.wait_all = class_wait(jobs, std::nullopt);
  std::vector<double> gen_nh;
  for (const auto& j : jobs) {
    if (j.finished()) ++s.completed;
    const double nh = j.node_hours();
    if (j.cls == JobClass::baseline) {
      s.node_hours_baseline += nh;
    } else {
      s.node_hours_generative += nh;
      if (j.finished()) gen_nh.push_back(nh);
    }
    if (j.finished()) {
      s.per_job.push_back({j.id, j.cls, j.submit, *j.start, *j.end, j.nodes_profile(), nh, j.wait()});
    }
  }
  s.generative_job_node_hours = mean_std(gen_nh);
  s.reconfig = reconfig_summary(ledger_from_trace(trace));
  const auto [ws, we] = generative_window(jobs);
  if (we > ws) s.nodes_per_day = nodes_per_day(timeline, trace.total_nodes, ws, we, options.day_seconds);
  return s;
}

namespace {

ordered_json opt(const std::optional<Seconds>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<Seconds> opt_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<Seconds>();
}

ordered_json wait_json(const ClassWait& w) { return {{"count", w.count}, {"avg_s", w.avg}, {"std_s", w.std}}; }

ClassWait wait_from(const nlohmann::json& j) {
  return {j.at("count").get<std::size_t>(), j.at("avg_s").get<double>(), j.at("std_s").get<double>()};
}

double hours(Seconds s) { return static_cast<double>(s) / 3600.0; }

}  // namespace

ordered_json to_json(const MetricsSummary& s) {
  ordered_json j;
  j["format"] = "mallsim-summary";
  j["version"] = kSummaryVersion;
  j["total_nodes"] = s.total_nodes;
  j["warmup_end_s"] = s.warmup_end;
  j["jobs"] = {{"submitted", s.submitted}, {"completed", s.completed}, {"rejected", s.rejected}};
  j["makespan"] = {
      {"complete_s", s.makespan_complete},
      {"complete_h", hours(s.makespan_complete)},
      {"baseline_s", opt(s.makespan_baseline)},
      {"generative_s", opt(s.makespan_generative)},
      {"generative_h", s.makespan_generative ? ordered_json(hours(*s.makespan_generative)) : ordered_json(nullptr)},
  };
  j["alloc_rate"] = {{"avg", s.alloc_rate.avg}, {"std", s.alloc_rate.std}};
  j["wait"] = {{"baseline", wait_json(s.wait_baseline)},
               {"generative", wait_json(s.wait_generative)},
               {"all", wait_json(s.wait_all)}};
  j["node_hours"] = {{"baseline", s.node_hours_baseline},
                     {"generative", s.node_hours_generative},
                     {"generative_job_avg", s.generative_job_node_hours.avg},
                     {"generative_job_std", s.generative_job_node_hours.std}};
  const auto& r = s.reconfig;
  j["reconfig"] = {{"expansions", r.expansions},
                   {"shrinkages", r.shrinkages},
                   {"total", r.total()},
                   {"expand_overhead_s", r.expand_overhead},
                   {"shrink_overhead_s", r.shrink_overhead},
                   {"overhead_s", r.overhead()},
                   {"avg_expand_s", r.avg_expand()},
                   {"avg_shrink_s", r.avg_shrink()},
                   {"avg_s", r.avg()}};
  const auto& n = s.nodes_per_day;
  ordered_json days = ordered_json::array();
  for (const auto& d : n.days) {
    days.push_back({{"start_s", d.start}, {"length_s", d.length}, {"baseline", d.baseline}, {"generative", d.generative}});
  }
  j["nodes_per_day"] = {{"window_start_s", n.window_start},
                        {"window_end_s", n.window_end},
                        {"day_seconds", n.day_seconds},
                        {"available", n.available},
                        {"baseline", n.baseline},
                        {"generative", n.generative},
                        {"accumulated", n.accumulated},
                        {"baseline_pct", n.baseline_pct},
                        {"generative_pct", n.generative_pct},
                        {"accumulated_pct", n.accumulated_pct},
                        {"days", std::move(days)}};
  ordered_json per_job = ordered_json::array();
  for (const auto& p : s.per_job) {
    per_job.push_back({{"job_id", p.id},
                       {"class", to_string(p.cls)},
                       {"submit", p.submit},
                       {"start", p.start},
                       {"end", p.end},
                       {"nodes_profile", p.nodes_profile},
                       {"node_hours", p.node_hours},
                       {"wait", p.wait}});
  }
  j["per_job"] = std::move(per_job);
  return j;
}

MetricsSummary summary_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "mallsim-summary" || j.value("version", 0) != kSummaryVersion) {
    throw std::invalid_argument("not a version " + std::to_string(kSummaryVersion) + " summary");
  }
  MetricsSummary s;
  s.total_nodes = j.at("total_nodes").get<int>();
  s.warmup_end = j.at("warmup_end_s").get<Seconds>();
  const auto& jobs = j.at("jobs");
  s.submitted = jobs.at("submitted").get<std::size_t>();
  s.completed = jobs.at("completed").get<std::size_t>();
  s.rejected = jobs.at("rejected").get<std::size_t>();
  const auto& m = j.at("makespan");
  s.makespan_complete = m.at("complete_s").get<Seconds>();
  s.makespan_baseline = opt_from(m.at("baseline_s"));
  s.makespan_generative = opt_from(m.at("generative_s"));
  s.alloc_rate = {j.at("alloc_rate").at("avg").get<double>(), j.at("alloc_rate").at("std").get<double>()};
  s.wait_baseline = wait_from(j.at("wait").at("baseline"));
  s.wait_generative = wait_from(j.at("wait").at("generative"));
  s.wait_all = wait_from(j.at("wait").at("all"));
  const auto& nh = j.at("node_hours");
  s.node_hours_baseline = nh.at("baseline").get<double>();
  s.node_hours_generative = nh.at("generative").get<double>();
  s.generative_job_node_hours = {nh.at("generative_job_avg").get<double>(), nh.at("generative_job_std").get<double>()};
  const auto& r = j.at("reconfig");
  s.reconfig.expansions = r.at("expansions").get<int>();
  s.reconfig.shrinkages = r.at("shrinkages").get<int>();
  s.reconfig.expand_overhead = r.at("expand_overhead_s").get<Seconds>();
  s.reconfig.shrink_overhead = r.at("shrink_overhead_s").get<Seconds>();
  const auto& n = j.at("nodes_per_day");
  auto& out = s.nodes_per_day;
  out.window_start = n.at("window_start_s").get<Seconds>();
  out.window_end = n.at("window_end_s").get<Seconds>();
  out.day_seconds = n.at("day_seconds").get<Seconds>();
  out.available = n.at("available").get<double>();
  out.baseline = n.at("baseline").get<double>();
  out.generative = n.at("generative").get<double>();
  out.accumulated = n.at("accumulated").get<double>();
  out.baseline_pct = n.at("baseline_pct").get<double>();
  out.generative_pct = n.at("generative_pct").get<double>();
  out.accumulated_pct = n.at("accumulated_pct").get<double>();
  for (const auto& d : n.at("days")) {
    out.days.push_back({d.at("start_s").get<Seconds>(), d.at("length_s").get<Seconds>(),
                        d.at("baseline").get<double>(), d.at("generative").get<double>()});
  }
  for (const auto& p : j.at("per_job")) {
    s.per_job.push_back({p.at("job_id").get<JobId>(), job_class_from_string(p.at("class").get<std::string>()),
                         p.at("submit").get<Seconds>(), p.at("start").get<Seconds>(), p.at("end").get<Seconds>(),
                         p.at("nodes_profile").get<std::string>(), p.at("node_hours").get<double>(),
                         p.at("wait").get<Seconds>()});
  }
  return s;
}

void write_timeline_csv(std::ostream& out, std::span<const TimelineSample> timeline, Seconds step) {
  if (step < 1) throw std::invalid_argument("timeline step must be >= 1");
  out << "t,alloc_total,alloc_baseline,alloc_generative\n";
  for (std::size_t i = 0; i < timeline.size(); i += static_cast<std::size_t>(step)) {
    const auto& s = timeline[i];
    out << s.t << ',' << s.total << ',' << s.baseline << ',' << s.generative << '\n';
  }
}

void write_jobs_csv(std::ostream& out, std::span<const JobRecord> jobs) {
  out << "job_id,class,submit,start,end,nodes_profile,node_hours,wait\n";
  for (const auto& j : jobs) {
    out << j.id << ',' << to_string(j.cls) << ',' << j.submit << ',';
    if (j.start) out << *j.start;
    out << ',';
    if (j.end) out << *j.end;
    out << ',' << j.nodes_profile() << ',' << fmt(j.node_hours()) << ',';
    if (j.start) out << j.wait();
    out << '\n';
  }
}

void write_wait_diff_csv(std::ostream& out, std::span<const WaitDiff> diffs) {
  out << "job_id,wait,reference_wait,diff\n";
  for (const auto& d : diffs) out << d.id << ',' << d.wait << ',' << d.reference_wait << ',' << d.diff << '\n';
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

}  // namespace

void export_report(const std::string& dir, const trace::Trace& trace, const ReportOptions& options,
                   Seconds timeline_step) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
  const fs::path base(dir);
  const auto jobs = job_records(trace);
  {
    auto out = open_out(base / "timeline.csv");
    write_timeline_csv(out, allocation_timeline(trace), timeline_step);
  }
  {
    auto out = open_out(base / "jobs.csv");
    write_jobs_csv(out, jobs);
  }
  {
    auto out = open_out(base / "reconfig.csv");
    const auto ledger = ledger_from_trace(trace);
    malleability::write_ledger_csv(out, ledger);
  }
  {
    auto out = open_out(base / "summary.json");
    out << to_json(summarize(trace, options)).dump(2) << '\n';
    if (!out) throw std::runtime_error("error writing summary.json");
  }
}

}  // namespace mallsim::metrics
