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

#include "mallsim/scenario.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace mallsim::scenario {

namespace fs = std::filesystem;
using nlohmann::json;
namespace mall = malleability;

namespace {

std::string sampling_reason(const sampling::SamplingFailed& f) { return "user sampling failed: " + f.reason; }

}  // namespace

SamplingError::SamplingError(sampling::SamplingSpec s, sampling::SamplingFailed f)
    : std::runtime_error(sampling_reason(f)), spec(std::move(s)), failure(std::move(f)) {}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json load_config_rec(const fs::path& path, int depth) {
  if (depth > 16) throw ConfigError("config includes nest too deeply at " + path.string());
  json j = read_json_file(path);
  if (!j.is_object()) throw ConfigError(path.string() + ": top level must be an object");
  const fs::path dir = fs::absolute(path).parent_path();
  if (j.contains("workload") && j["workload"].is_object() && j["workload"].contains("log") &&
      j["workload"]["log"].is_string()) {
    fs::path log = j["workload"]["log"].get<std::string>();
    if (log.is_relative()) j["workload"]["log"] = (dir / log).lexically_normal().string();
  }
  json merged = json::object();
  if (j.contains("include")) {
    json inc = j["include"];
    j.erase("include");
    if (inc.is_string()) inc = json::array({inc});
    if (!inc.is_array()) throw ConfigError(path.string() + ": include must be a path or list of paths");
    for (const auto& p : inc) {
      if (!p.is_string()) throw ConfigError(path.string() + ": include entries must be strings");
      merged.merge_patch(load_config_rec(dir / p.get<std::string>(), depth + 1));
    }
  }
  merged.merge_patch(j);
  return merged;
}

template <class T>
std::optional<T> opt_field(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::pair<int, int> parse_transition(const std::string& key) {
  const auto arrow = key.find("->");
  if (arrow == std::string::npos) throw ConfigError("cost key '" + key + "' is not of the form A->B");
  try {
    return {std::stoi(key.substr(0, arrow)), std::stoi(key.substr(arrow + 2))};
  } catch (const std::exception&) {
    throw ConfigError("cost key '" + key + "' is not of the form A->B");
  }
}

}  // namespace

json load_config_json(const fs::path& path) { return load_config_rec(path, 0); }

mall::AppModel app_model_from_json(const json& j, const std::string& name) {
  mall::AppModel m;
  m.name = name;
  m.level_set = j.at("levels").get<std::vector<int>>();
  m.step_time_ms = j.at("step_ms").get<std::vector<std::int64_t>>();
  m.total_steps = j.value("total_steps", 1800);
  for (const auto& [k, v] : j.at("costs").items()) m.reconfig_cost[parse_transition(k)] = v.get<Seconds>();
  if (j.contains("pe")) m.pe_table = j.at("pe").get<std::vector<double>>();
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return m;
}

json app_model_to_json(const mall::AppModel& m) {
  json j;
  j["levels"] = m.level_set;
  j["step_ms"] = m.step_time_ms;
  j["total_steps"] = m.total_steps;
  json costs = json::object();
  for (const auto& [k, v] : m.reconfig_cost) costs[std::to_string(k.first) + "->" + std::to_string(k.second)] = v;
  j["costs"] = costs;
  if (!m.pe_table.empty()) j["pe"] = m.pe_table;
  return j;
}

mall::PolicyConfig policy_from_json(const json& j) {
  mall::PolicyConfig p;
  p.kind = mall::policy_kind_from_string(j.at("kind").get<std::string>());
  p.pe_shrink_threshold = j.value("pe_shrink_threshold", 0.85);
  p.pe_expand_threshold = j.value("pe_expand_threshold", 0.10);
  p.iteration_inhibitor = j.value("iteration_inhibitor", false);
  p.iterations_per_node = j.value("iterations_per_node", 1);
  p.cost_inhibitor = opt_field<Seconds>(j, "cost_inhibitor");
  p.nodes_min = j.value("nodes_min", 1);
  p.nodes_max = j.value("nodes_max", std::numeric_limits<int>::max());
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return p;
}

Scenario scenario_from_json(const json& j, const fs::path& base_dir) {
  Scenario s;
  try {
    s.name = j.value("name", std::string("scenario"));
    if (!j.contains("seed") || j.at("seed").is_null()) throw ConfigError("seed is mandatory");
    s.seed = j.at("seed").get<std::uint64_t>();

    const auto& c = j.at("cluster");
    s.sim.total_nodes = c.at("nodes").get<int>();
    if (c.contains("scheduler")) {
      const auto& sc = c.at("scheduler");
      s.sim.scheduler.backfill = sched::backfill_from_string(sc.value("backfill", std::string("easy")));
      s.sim.scheduler.aging_weight = sc.value("aging_weight", 1.0);
      s.sim.scheduler.tiebreak = sched::tiebreak_from_string(sc.value("tiebreak", std::string("submit_order")));
    }
    s.sim.horizon = opt_field<Seconds>(c, "horizon");
    s.sim.trace_syncs = c.value("trace_syncs", false);
    s.sim.reservation_aware_expansion = c.value("reservation_aware_expansion", false);
    if (auto cap = opt_field<std::uint64_t>(c, "max_events_per_instant")) s.sim.max_events_per_instant = *cap;
    s.sim.validate();

    if (j.contains("workload") && !j.at("workload").is_null()) {
      const auto& w = j.at("workload");
      auto& wc = s.workload;
      if (auto log = opt_field<std::string>(w, "log")) {
        fs::path p = *log;
        wc.log = p.is_relative() ? (base_dir / p).lexically_normal() : p;
      }
      wc.parse.cores_per_node = opt_field<int>(w, "cores_per_node");
      wc.parse.utc_offset = opt_field<std::int64_t>(w, "utc_offset");
      wc.parse.strict_header = w.value("strict_header", false);
      if (w.contains("filter")) {
        const auto& f = w.at("filter");
        if (f.contains("queues")) {
          for (auto q : f.at("queues").get<std::vector<std::int64_t>>()) wc.queues.insert(q);
        }
        wc.window_start = opt_field<std::string>(f, "start");
        wc.window_end = opt_field<std::string>(f, "end");
        wc.max_nodes = opt_field<int>(f, "max_nodes");
      }
      if (w.contains("time_scale")) {
        const auto& ts = w.at("time_scale");
        wc.scale = ingest::TimeScale::parse(ts.is_string() ? ts.get<std::string>() : ts.dump());
      }
      if (w.contains("sampling") && !w.at("sampling").is_null()) {
        const auto& sm = w.at("sampling");
        SamplingConf sc;
        sc.target_daily_load = opt_field<double>(sm, "target_daily_load");
        sc.target_fraction = opt_field<double>(sm, "target_fraction");
        if (sc.target_daily_load.has_value() == sc.target_fraction.has_value()) {
          throw ConfigError("sampling needs exactly one of target_daily_load and target_fraction");
        }
        sc.statistic = sampling::statistic_from_string(sm.value("statistic", std::string("mean")));
        if (sm.contains("band")) {
          const auto band = sm.at("band").get<std::vector<double>>();
          if (band.size() != 2) throw ConfigError("sampling band needs two values");
          sc.band_low = band[0];
          sc.band_high = band[1];
        }
        wc.sampling = sc;
      }
      if (w.contains("pool") && !w.at("pool").is_null()) wc.pool = w.at("pool").get<std::vector<UserId>>();
    }

    s.warmup_end = opt_field<Seconds>(j, "warmup_end");
    if (j.contains("report")) {
      s.day_seconds = j.at("report").value("day_seconds", Seconds{86400});
      s.timeline_step = j.at("report").value("timeline_step", Seconds{1});
    }

    if (j.contains("app_models")) {
      for (const auto& [name, m] : j.at("app_models").items()) {
        s.apps[name] = std::make_shared<const mall::AppModel>(app_model_from_json(m, name));
      }
    }
    if (j.contains("policies")) {
      for (const auto& [name, p] : j.at("policies").items()) {
        s.policies[name] = std::make_shared<const mall::PolicyConfig>(policy_from_json(p));
      }
    }
    if (j.contains("generative_users")) {
      for (const auto& u : j.at("generative_users")) {
        submit::GenerativeUserSpec g;
        g.user = u.at("user").get<UserId>();
        g.t0 = u.value("t0", Seconds{0});
        g.think_time = u.value("think_time", Seconds{0});
        g.count = u.value("count", 1);
        g.deadline = opt_field<Seconds>(u, "deadline");
        g.first_job_id = u.value("first_job_id", JobId{0});
        auto& t = g.job_template;
        const auto app = u.at("app").get<std::string>();
        if (!s.apps.count(app)) throw ConfigError("unknown app model '" + app + "'");
        t.app = s.apps.at(app);
        const auto pol = u.value("policy", std::string());
        if (!pol.empty()) {
          if (!s.policies.count(pol)) throw ConfigError("unknown policy '" + pol + "'");
          t.policy = s.policies.at(pol);
        }
        t.nodes_min = u.at("nodes_min").get<int>();
        t.nodes_max = u.value("nodes_max", t.nodes_min);
        t.walltime = opt_field<Seconds>(u, "walltime");
        try {
          g.validate();
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
        s.users.push_back(std::move(g));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  s.resolved = j;
  s.hash = sha256_hex(j.dump());
  return s;
}

Scenario load_scenario(const fs::path& path, const Overrides& overrides) {
  json j = load_config_json(path);
  if (overrides.seed) j["seed"] = *overrides.seed;
  if (overrides.warmup_end) j["warmup_end"] = *overrides.warmup_end;
  if (overrides.scale) j["workload"]["time_scale"] = *overrides.scale;
  if (overrides.log) j["workload"]["log"] = fs::absolute(*overrides.log).lexically_normal().string();
  // Paths are recorded relative to the config so the hash is location independent.
  const fs::path base = fs::absolute(path).parent_path().lexically_normal();
  if (j.contains("workload") && j["workload"].is_object() && j["workload"].contains("log") &&
      j["workload"]["log"].is_string()) {
    const fs::path log = j["workload"]["log"].get<std::string>();
    j["workload"]["log"] = log.lexically_relative(base).generic_string();
  }
  return scenario_from_json(j, base);
}

ingest::WorkloadLog ingest_log(const WorkloadConf& w, bool scale) {
  if (!w.log) return {};
  if (!fs::is_regular_file(*w.log)) throw ConfigError("workload log not found: " + w.log->string());
  auto log = ingest::parse_swf_file(w.log->string(), w.parse);
  if (!w.queues.empty() || w.window_start || w.window_end || w.max_nodes) {
    ingest::FilterSpec f;
    f.keep_queues = w.queues;
    Seconds last = 0;
    for (const auto& j : log.jobs) last = std::max(last, j.submit_time);
    const Seconds span = std::max(log.span_end.value_or(0), last + 1);
    f.window_start = w.window_start ? ingest::parse_datetime(*w.window_start, log.utc_offset) : log.origin_timestamp;
    f.window_end = w.window_end ? ingest::parse_datetime(*w.window_end, log.utc_offset)
                                : log.origin_timestamp + static_cast<std::int64_t>(span * log.time_scale);
    f.max_nodes = w.max_nodes;
    log = ingest::filter(log, f);
  }
  if (scale) log = ingest::scale_time(log, w.scale);
  return log;
}

PreparedWorkload prepare_workload(const Scenario& s) {
  PreparedWorkload out;
  auto log = ingest_log(s.workload, false);
  if (s.workload.pool) {
    log = sampling::restrict_to_users(log, *s.workload.pool);
  } else if (s.workload.sampling && !log.jobs.empty()) {
    const auto& sc = *s.workload.sampling;
    sampling::SamplingSpec spec;
    spec.target_daily_load = sc.target_daily_load ? *sc.target_daily_load
                                                  : *sc.target_fraction * s.sim.total_nodes * 24.0;
    spec.platform_nodes = s.sim.total_nodes;
    spec.statistic = sc.statistic;
    spec.band_low = sc.band_low;
    spec.band_high = sc.band_high;
    spec.seed = s.seed;
    auto result = sampling::sample_users(log, spec);
    if (auto* failed = std::get_if<sampling::SamplingFailed>(&result)) throw SamplingError(spec, *failed);
    log = sampling::restrict_to_users(log, std::get<sampling::UserPool>(result).users);
    out.sampling_spec = spec;
    out.sampling = std::move(result);
  }
  out.log = ingest::scale_time(log, s.workload.scale);
  return out;
}

ScenarioRun run_scenario(const Scenario& s) {
  ScenarioRun run;
  run.workload = prepare_workload(s);
  sim::Simulator simulator(s.sim);
  submit::replay_traditional(submit::TraditionalScript::from_log(run.workload.log), simulator);

  JobId next_id = 1;
  for (const auto& j : run.workload.log.jobs) next_id = std::max(next_id, j.job_id + 1);
  std::vector<std::unique_ptr<submit::GenerativeUser>> users;
  for (auto spec : s.users) {
    spec.t0 = submit::warmup_gate(spec, s.warmup_end);
    if (spec.first_job_id <= 0) spec.first_job_id = next_id;
    next_id = std::max(next_id, spec.first_job_id + spec.count);
    users.push_back(std::make_unique<submit::GenerativeUser>(spec));
    users.back()->attach(simulator);
  }
  run.result = simulator.run();
  for (const auto& u : users) {
    run.users.push_back({u->spec().user, u->spec().t0, u->submission_times(), u->completions(),
                         u->incomplete(), u->spec().deadline});
  }
  return run;
}

metrics::ReportOptions report_options(const Scenario& s) {
  return {s.warmup_end.value_or(0), s.day_seconds};
}

void write_resolved_config(const fs::path& dir, const Scenario& s) {
  fs::create_directories(dir);
  std::ofstream cfg(dir / "resolved_config.json", std::ios::binary);
  cfg << s.resolved.dump(2) << '\n';
  std::ofstream h(dir / "config.sha256", std::ios::binary);
  h << s.hash << '\n';
  if (!cfg || !h) throw std::runtime_error("cannot write config record to " + dir.string());
}

void write_outputs(const fs::path& dir, const Scenario& s, const ScenarioRun& run) {
  write_resolved_config(dir, s);
  trace::write_ndjson_file((dir / "trace.ndjson").string(), run.result.trace);
  {
    std::ofstream out(dir / "ledger.csv", std::ios::binary);
    mall::write_ledger_csv(out, run.result.ledger);
  }
  {
    nlohmann::ordered_json g;
    g["scenario"] = s.name;
    g["events"] = run.result.events;
    g["vetoes"] = run.result.vetoes;
    g["dropped_expansions"] = run.result.dropped;
    g["horizon_reached"] = run.result.horizon_reached;
    g["unfinished"] = run.result.unfinished;
    auto users = nlohmann::ordered_json::array();
    for (const auto& u : run.users) {
      nlohmann::ordered_json x;
      x["user"] = u.user;
      x["t0"] = u.t0;
      x["submissions"] = u.submissions;
      auto ends = nlohmann::ordered_json::array();
      for (const auto& c : u.completions) ends.push_back({{"job", c.job}, {"end", c.end_time}});
      x["completions"] = ends;
      x["incomplete"] = u.incomplete;
      x["deadline"] = u.deadline ? nlohmann::ordered_json(*u.deadline) : nlohmann::ordered_json(nullptr);
      if (u.deadline && !u.completions.empty()) {
        x["deadline_met"] = u.completions.size() == u.submissions.size() && !u.incomplete &&
                            u.completions.back().end_time <= *u.deadline;
      }
      users.push_back(std::move(x));
    }
    g["generative_users"] = std::move(users);
    std::ofstream out(dir / "run.json", std::ios::binary);
    out << g.dump(2) << '\n';
  }
  if (run.workload.sampling) {
    std::ofstream out(dir / "sampling.json", std::ios::binary);
    sampling::write_sidecar(out, *run.workload.sampling_spec, *run.workload.sampling);
  }
  metrics::export_report(dir.string(), run.result.trace, report_options(s), s.timeline_step);
}

}  // namespace mallsim::scenario
