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

#include "mallsim/trace.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace mallsim::trace {

using nlohmann::ordered_json;

std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::submit:
      return "submit";
    case Kind::start:
      return "start";
    case Kind::reconfig:
      return "reconfig";
    case Kind::end:
      return "end";
    case Kind::sync:
      return "sync";
    case Kind::reject:
      return "reject";
  }
  return "?";
}

Kind kind_from_string(std::string_view s) {
  for (Kind k : {Kind::submit, Kind::start, Kind::reconfig, Kind::end, Kind::sync, Kind::reject}) {
    if (to_string(k) == s) return k;
  }
  throw TraceError("unknown trace record kind '" + std::string(s) + "'");
}

void write_ndjson(std::ostream& out, const Trace& trace) {
  ordered_json header;
  header["format"] = "mallsim-trace";
  header["version"] = kTraceVersion;
  header["total_nodes"] = trace.total_nodes;
  out << header.dump() << '\n';
  for (const auto& r : trace.records) {
    ordered_json j;
    j["t"] = r.t;
    j["kind"] = to_string(r.kind);
    j["job"] = r.job;
    j["nodes"] = r.nodes;
    j["detail"] = r.detail;
    out << j.dump() << '\n';
  }
}

void write_ndjson_file(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_ndjson(out, trace);
  if (!out) throw std::runtime_error("error writing " + path);
}

Trace read_ndjson(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw TraceError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      if (!have_header) {
        if (j.value("format", "") != "mallsim-trace") throw TraceError("missing trace header");
        const int v = j.at("version").get<int>();
        if (v != kTraceVersion) throw TraceError("unsupported trace version " + std::to_string(v));
        trace.total_nodes = j.at("total_nodes").get<int>();
        have_header = true;
        continue;
      }
      Record r;
      r.t = j.at("t").get<Seconds>();
      r.kind = kind_from_string(j.at("kind").get<std::string>());
      r.job = j.at("job").get<JobId>();
      r.nodes = j.at("nodes").get<int>();
      r.detail = j.at("detail");
      trace.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw TraceError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw TraceError("empty trace");
  return trace;
}

Trace read_ndjson_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError("cannot open " + path);
  return read_ndjson(in);
}

}  // namespace mallsim::trace
