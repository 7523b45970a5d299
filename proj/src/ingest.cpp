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

#include "mallsim/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace mallsim::ingest {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

// Header keys held in WorkloadLog fields rather than in metadata.
constexpr std::string_view kUnixStartTime = "UnixStartTime";
constexpr std::string_view kTimeZone = "TimeZone";
constexpr std::string_view kTimeScale = "TimeScale";
constexpr std::string_view kWindowEnd = "WindowEnd";
constexpr std::string_view kCoresPerNode = "CoresPerNode";

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<std::int64_t> to_int(std::string_view tok) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec == std::errc() && p == tok.data() + tok.size()) return v;
  double d = 0;
  auto [pd, ecd] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
  if (ecd == std::errc() && pd == tok.data() + tok.size() && std::trunc(d) == d &&
      std::abs(d) < 9e18) {
    return static_cast<std::int64_t>(d);
  }
  return std::nullopt;
}

std::optional<double> to_double(std::string_view tok) {
  double d = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
  if (ec == std::errc() && p == tok.data() + tok.size()) return d;
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

const char* const kFieldNames[18] = {
    "job id",           "submit time",     "wait time",      "run time",
    "allocated procs",  "average cpu time", "used memory",    "requested procs",
    "requested time",   "requested memory", "status",         "user id",
    "group id",         "executable id",   "queue id",       "partition id",
    "preceding job",    "think time"};

}  // namespace

JobStatus status_from_code(int code) {
  switch (code) {
    case 1:
      return JobStatus::completed;
    case 0:
      return JobStatus::failed;
    case 5:
      return JobStatus::cancelled;
    default:
      return JobStatus::unknown;
  }
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

std::set<std::int64_t> WorkloadLog::declared_queues() const {
  std::set<std::int64_t> queues;
  for (const auto& [key, value] : metadata) {
    if (key == "Queue") {
      std::istringstream in(value);
      std::string first;
      in >> first;
      if (auto id = to_int(first)) queues.insert(*id);
    } else if (key == "Queues") {
      std::string text = value;
      std::replace(text.begin(), text.end(), ',', ' ');
      std::istringstream in(text);
      std::string tok;
      std::set<std::int64_t> listed;
      bool all_numeric = true;
      while (in >> tok) {
        if (auto id = to_int(tok)) {
          listed.insert(*id);
        } else {
          all_numeric = false;
        }
      }
      if (all_numeric) queues.insert(listed.begin(), listed.end());
    }
  }
  return queues;
}

WorkloadLog parse_swf(std::istream& in, const ParseOptions& options) {
  WorkloadLog log;
  std::optional<std::int64_t> unix_start, time_zone, max_nodes, max_procs, header_cpn;
  std::vector<std::int64_t> processors;  // parallel to log.jobs
  std::vector<JobId> unknown_runtime, unknown_size;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;

    if (text.front() == ';') {
      const std::string_view body = trim(text.substr(1));
      const auto colon = body.find(':');
      if (colon == std::string_view::npos) {
        log.metadata.emplace_back("", std::string(body));
        continue;
      }
      const std::string key(trim(body.substr(0, colon)));
      const std::string value(trim(body.substr(colon + 1)));
      auto header_int = [&](std::optional<std::int64_t>& slot) {
        auto v = to_int(value);
        if (!v) throw ParseError(line_no, "header key " + key + " is not an integer: '" + value + "'");
        slot = *v;
      };
      if (key == kUnixStartTime) {
        header_int(unix_start);
      } else if (key == kTimeZone) {
        header_int(time_zone);
      } else if (key == kCoresPerNode) {
        header_int(header_cpn);
      } else if (key == kTimeScale) {
        auto v = to_double(value);
        if (!v || *v <= 0) throw ParseError(line_no, "invalid TimeScale '" + value + "'");
        log.time_scale = *v;
      } else if (key == kWindowEnd) {
        std::optional<std::int64_t> end;
        header_int(end);
        log.span_end = end;
      } else {
        if (key == "MaxNodes") max_nodes = to_int(value);
        if (key == "MaxProcs") max_procs = to_int(value);
        log.metadata.emplace_back(key, value);
      }
      continue;
    }

    std::vector<std::string_view> fields;
    {
      std::size_t pos = 0;
      while (pos < text.size()) {
        const auto start = text.find_first_not_of(" \t", pos);
        if (start == std::string_view::npos) break;
        auto end = text.find_first_of(" \t", start);
        if (end == std::string_view::npos) end = text.size();
        fields.push_back(text.substr(start, end - start));
        pos = end;
      }
    }
    if (fields.size() != 18) {
      throw ParseError(line_no, "expected 18 fields, found " + std::to_string(fields.size()));
    }
    auto integer = [&](int idx) {
      auto v = to_int(fields[idx]);
      if (!v) {
        throw ParseError(line_no, std::string("non-numeric ") + kFieldNames[idx] + " '" +
                                      std::string(fields[idx]) + "'");
      }
      return *v;
    };
    auto real = [&](int idx) {
      auto v = to_double(fields[idx]);
      if (!v) {
        throw ParseError(line_no, std::string("non-numeric ") + kFieldNames[idx] + " '" +
                                      std::string(fields[idx]) + "'");
      }
      return *v;
    };

    SwfJob job;
    job.job_id = integer(0);
    job.submit_time = integer(1);
    job.wait_time = integer(2);
    job.run_time = integer(3);
    job.allocated_processors = integer(4);
    job.avg_cpu_time = real(5);
    job.used_memory = real(6);
    job.requested_processors = integer(7);
    job.requested_time = integer(8);
    job.requested_memory = real(9);
    job.status_code = static_cast<int>(integer(10));
    job.user_id = integer(11);
    job.group_id = integer(12);
    job.executable_id = integer(13);
    job.queue_id = integer(14);
    job.partition_id = integer(15);
    job.preceding_job = integer(16);
    job.think_time = integer(17);

    if (job.submit_time < 0) throw ParseError(line_no, "negative submit time");
    if (job.run_time < 0) {
      unknown_runtime.push_back(job.job_id);
      continue;
    }
    const std::int64_t procs = job.allocated_processors > 0   ? job.allocated_processors
                               : job.requested_processors > 0 ? job.requested_processors
                                                              : -1;
    if (procs <= 0) {
      unknown_size.push_back(job.job_id);
      continue;
    }
    processors.push_back(procs);
    log.jobs.push_back(job);
  }

  auto missing = [&](const std::string& what) {
    if (options.strict_header) throw ParseError(line_no, "missing header key " + what);
    log.warnings.push_back("missing header key " + what);
  };

  if (options.cores_per_node) {
    log.cores_per_node = *options.cores_per_node;
  } else if (header_cpn) {
    log.cores_per_node = static_cast<int>(*header_cpn);
  } else if (max_nodes && max_procs && *max_nodes > 0 && *max_procs > 0) {
    log.cores_per_node = static_cast<int>(std::max<std::int64_t>(1, *max_procs / *max_nodes));
  } else {
    missing("MaxNodes/MaxProcs");
    log.cores_per_node = 1;
  }
  if (log.cores_per_node < 1) throw ParseError(line_no, "cores per node must be positive");

  if (unix_start) {
    log.origin_timestamp = *unix_start;
  } else {
    missing(std::string(kUnixStartTime));
  }
  log.utc_offset = options.utc_offset ? *options.utc_offset : time_zone.value_or(0);

  for (std::size_t i = 0; i < log.jobs.size(); ++i) {
    log.jobs[i].nodes_requested = static_cast<int>(ceil_div(processors[i], log.cores_per_node));
  }

  auto note_dropped = [&](const std::vector<JobId>& ids, const char* why) {
    if (ids.empty()) return;
    std::string msg = "dropped " + std::to_string(ids.size()) + " job(s) with " + why + " (";
    for (std::size_t i = 0; i < ids.size() && i < 5; ++i) {
      msg += (i ? ", " : "") + std::to_string(ids[i]);
    }
    msg += ids.size() > 5 ? ", ...)" : ")";
    log.warnings.push_back(msg);
  };
  note_dropped(unknown_runtime, "unknown run time");
  note_dropped(unknown_size, "unknown processor count");

  std::stable_sort(log.jobs.begin(), log.jobs.end(),
                   [](const SwfJob& a, const SwfJob& b) { return a.submit_time < b.submit_time; });

  const auto queues = log.declared_queues();
  if (!queues.empty()) {
    std::set<std::int64_t> undeclared;
    for (const auto& j : log.jobs) {
      if (!queues.count(j.queue_id)) undeclared.insert(j.queue_id);
    }
    for (auto q : undeclared) {
      log.warnings.push_back("queue " + std::to_string(q) + " is not declared in the header");
    }
  }
  return log;
}

WorkloadLog parse_swf_file(const std::string& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open SWF file '" + path + "'");
  return parse_swf(in, options);
}

void write_swf(std::ostream& out, const WorkloadLog& log) {
  out << "; " << kUnixStartTime << ": " << log.origin_timestamp << '\n';
  if (log.utc_offset != 0) out << "; " << kTimeZone << ": " << log.utc_offset << '\n';
  out << "; " << kCoresPerNode << ": " << log.cores_per_node << '\n';
  if (log.time_scale != 1.0) out << "; " << kTimeScale << ": " << format_double(log.time_scale) << '\n';
  if (log.span_end) out << "; " << kWindowEnd << ": " << *log.span_end << '\n';
  for (const auto& [key, value] : log.metadata) {
    if (key.empty()) {
      out << "; " << value << '\n';
    } else {
      out << "; " << key << ": " << value << '\n';
    }
  }
  for (const auto& j : log.jobs) {
    out << j.job_id << ' ' << j.submit_time << ' ' << j.wait_time << ' ' << j.run_time << ' '
        << j.allocated_processors << ' ' << format_double(j.avg_cpu_time) << ' '
        << format_double(j.used_memory) << ' ' << j.requested_processors << ' '
        << j.requested_time << ' ' << format_double(j.requested_memory) << ' ' << j.status_code
        << ' ' << j.user_id << ' ' << j.group_id << ' ' << j.executable_id << ' ' << j.queue_id
        << ' ' << j.partition_id << ' ' << j.preceding_job << ' ' << j.think_time << '\n';
  }
}

void write_swf_file(const std::string& path, const WorkloadLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write SWF file '" + path + "'");
  write_swf(out, log);
  if (!out) throw std::runtime_error("error while writing '" + path + "'");
}

namespace {

// Absolute (Unix) time of relative log time t.
long double absolute_time(const WorkloadLog& log, Seconds t) {
  return static_cast<long double>(log.origin_timestamp) +
         static_cast<long double>(t) * static_cast<long double>(log.time_scale);
}

}  // namespace

WorkloadLog filter(const WorkloadLog& log, const FilterSpec& spec) {
  if (spec.window_start >= spec.window_end) {
    throw std::invalid_argument("filter window start must precede its end");
  }
  if (!log.jobs.empty()) {
    const long double first = absolute_time(log, log.jobs.front().submit_time);
    const long double last = absolute_time(log, log.jobs.back().submit_time);
    if (spec.window_end <= first || spec.window_start > last) {
      throw std::invalid_argument("filter window does not overlap the log");
    }
  }

  WorkloadLog out = log;
  out.jobs.clear();
  const auto scale = static_cast<long double>(log.time_scale);
  const auto offset = static_cast<Seconds>(
      std::llround(static_cast<long double>(spec.window_start - log.origin_timestamp) / scale));
  for (const auto& j : log.jobs) {
    const long double at = absolute_time(log, j.submit_time);
    if (at < spec.window_start || at >= spec.window_end) continue;
    if (!spec.keep_queues.empty() && !spec.keep_queues.count(j.queue_id)) continue;
    if (spec.max_nodes && j.nodes_requested > *spec.max_nodes) continue;
    SwfJob rebased = j;
    rebased.submit_time -= offset;
    out.jobs.push_back(rebased);
  }
  out.origin_timestamp = spec.window_start;
  out.span_end = static_cast<Seconds>(
      std::llround(static_cast<long double>(spec.window_end - spec.window_start) / scale));
  if (out.jobs.empty()) out.warnings.push_back("filter selected no jobs");
  return out;
}

TimeScale TimeScale::parse(const std::string& text) {
  TimeScale s;
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    auto n = to_int(trim(std::string_view(text).substr(0, slash)));
    auto d = to_int(trim(std::string_view(text).substr(slash + 1)));
    if (!n || !d) throw std::invalid_argument("invalid time scale '" + text + "'");
    s.num = *n;
    s.den = *d;
  } else if (auto n = to_int(trim(text))) {
    s.num = *n;
  } else {
    // Decimal notation: 2.5 -> 25/10.
    const auto dot = text.find('.');
    auto whole = to_int(trim(std::string_view(text).substr(0, dot)));
    const std::string frac = dot == std::string::npos ? "" : std::string(trim(text.substr(dot + 1)));
    auto frac_v = frac.empty() ? std::optional<std::int64_t>(0) : to_int(frac);
    if (!whole || !frac_v || frac.size() > 9 || frac.find_first_not_of("0123456789") != std::string::npos) {
      throw std::invalid_argument("invalid time scale '" + text + "'");
    }
    std::int64_t pow10 = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) pow10 *= 10;
    s.num = *whole * pow10 + *frac_v;
    s.den = pow10;
  }
  if (s.num <= 0 || s.den <= 0) throw std::invalid_argument("time scale must be positive");
  const auto g = std::gcd(s.num, s.den);
  s.num /= g;
  s.den /= g;
  return s;
}

Seconds scale_seconds(Seconds t, const TimeScale& scale) {
  // round(t * den / num), halves away from zero
  __extension__ using wide = __int128;
  const wide n = static_cast<wide>(t) * scale.den;
  const wide twice = 2 * n + (n >= 0 ? scale.num : -scale.num);
  return static_cast<Seconds>(twice / (2 * static_cast<wide>(scale.num)));
}

WorkloadLog scale_time(const WorkloadLog& log, const TimeScale& scale) {
  if (scale.num <= 0 || scale.den <= 0) throw std::invalid_argument("time scale must be positive");
  WorkloadLog out = log;
  for (auto& j : out.jobs) {
    const Seconds original_run = j.run_time;
    j.submit_time = scale_seconds(j.submit_time, scale);
    j.run_time = scale_seconds(j.run_time, scale);
    if (original_run >= 1 && j.run_time < 1) j.run_time = 1;
    if (j.wait_time > 0) j.wait_time = scale_seconds(j.wait_time, scale);
    if (j.requested_time > 0) j.requested_time = scale_seconds(j.requested_time, scale);
  }
  if (out.span_end) out.span_end = scale_seconds(*out.span_end, scale);
  out.time_scale = log.time_scale * scale.value();
  return out;
}

std::int64_t day_index(const WorkloadLog& log, Seconds t) {
  const long double local = static_cast<long double>(log.origin_timestamp + log.utc_offset) +
                            static_cast<long double>(t) * static_cast<long double>(log.time_scale);
  return floor_div(static_cast<std::int64_t>(std::floor(local)), kSecondsPerDay);
}

std::pair<std::int64_t, std::int64_t> day_span(const WorkloadLog& log) {
  const std::int64_t first = day_index(log, 0);
  Seconds last_t = 0;
  if (log.span_end && *log.span_end > 0) {
    last_t = *log.span_end - 1;
  } else if (!log.jobs.empty()) {
    last_t = log.jobs.back().submit_time;
  } else {
    return {first, 0};
  }
  return {first, day_index(log, last_t) - first + 1};
}

std::int64_t parse_datetime(const std::string& text, std::int64_t utc_offset) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  const int n = std::sscanf(text.c_str(), "%d-%d-%d%*[T ]%d:%d:%d", &y, &mo, &d, &h, &mi, &s);
  if (n != 3 && n < 5) throw std::invalid_argument("invalid date '" + text + "'");
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw std::invalid_argument("invalid date '" + text + "'");
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * kSecondsPerDay + h * 3600 + mi * 60 + s - utc_offset;
}

std::string format_date(std::int64_t day) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

DistributionReport summarize(const WorkloadLog& log) {
  if (log.jobs.empty()) throw std::invalid_argument("cannot summarize an empty log");
  DistributionReport r;
  r.total_jobs = log.jobs.size();

  auto [first_day, ndays] = day_span(log);
  const std::int64_t last_day =
      std::max(first_day + ndays - 1, day_index(log, log.jobs.back().submit_time));
  for (std::int64_t d = first_day; d <= last_day; ++d) {
    DaySummary day;
    day.day = d;
    day.date = format_date(d);
    r.days.push_back(std::move(day));
  }

  std::set<UserId> users;
  std::map<int, SizeBucket> sizes;
  std::vector<Seconds> runtimes;
  runtimes.reserve(log.jobs.size());
  for (const auto& j : log.jobs) {
    const double nh = j.node_hours();
    auto& day = r.days[static_cast<std::size_t>(day_index(log, j.submit_time) - first_day)];
    day.submissions[j.user_id] += 1;
    day.node_hours[j.user_id] += nh;
    r.total_node_hours += nh;
    users.insert(j.user_id);
    auto& b = sizes[j.nodes_requested];
    b.nodes = j.nodes_requested;
    b.jobs += 1;
    b.node_hours += nh;
    runtimes.push_back(j.run_time);
  }
  r.total_users = users.size();

  std::sort(runtimes.begin(), runtimes.end());
  const double n = static_cast<double>(runtimes.size());
  for (std::size_t i = 0; i < runtimes.size(); ++i) {
    if (i + 1 < runtimes.size() && runtimes[i + 1] == runtimes[i]) continue;
    r.runtime_cdf.emplace_back(runtimes[i], static_cast<double>(i + 1) / n);
  }

  double cum_jobs = 0, cum_nh = 0;
  for (auto& [nodes, b] : sizes) {
    b.job_fraction = b.jobs / n;
    b.node_hour_fraction = r.total_node_hours > 0 ? b.node_hours / r.total_node_hours : 0;
    cum_jobs += b.jobs;
    cum_nh += b.node_hours;
    b.cumulative_job_fraction = cum_jobs / n;
    b.cumulative_node_hour_fraction = r.total_node_hours > 0 ? cum_nh / r.total_node_hours : 0;
    r.sizes.push_back(b);
  }
  return r;
}

void write_report_json(std::ostream& out, const DistributionReport& report) {
  using nlohmann::json;
  json j;
  j["total_jobs"] = report.total_jobs;
  j["total_users"] = report.total_users;
  j["total_node_hours"] = report.total_node_hours;
  json days = json::array();
  for (const auto& d : report.days) {
    json users = json::array();
    for (const auto& [user, count] : d.submissions) {
      users.push_back({{"user", user}, {"submissions", count}, {"node_hours", d.node_hours.at(user)}});
    }
    days.push_back({{"date", d.date}, {"users", users}});
  }
  j["days"] = days;
  json cdf = json::array();
  for (const auto& [rt, frac] : report.runtime_cdf) cdf.push_back({rt, frac});
  j["runtime_cdf"] = cdf;
  json sizes = json::array();
  for (const auto& b : report.sizes) {
    sizes.push_back({{"nodes", b.nodes},
                     {"jobs", b.jobs},
                     {"job_fraction", b.job_fraction},
                     {"node_hours", b.node_hours},
                     {"node_hour_fraction", b.node_hour_fraction},
                     {"cumulative_job_fraction", b.cumulative_job_fraction},
                     {"cumulative_node_hour_fraction", b.cumulative_node_hour_fraction}});
  }
  j["sizes"] = sizes;
  out << j.dump(2) << '\n';
}

}  // namespace mallsim::ingest
