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

// Event trace records and their newline-delimited JSON form.

#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mallsim/common.hpp"

namespace mallsim::trace {

inline constexpr int kTraceVersion = 1;

enum class Kind { submit, start, reconfig, end, sync, reject };
std::string_view to_string(Kind k);
Kind kind_from_string(std::string_view s);

struct Record {
  Seconds t = 0;
  Kind kind = Kind::submit;
  JobId job = 0;
  /// Allocation after the event (0 for submit and reject).
  int nodes = 0;
  nlohmann::ordered_json detail = nlohmann::ordered_json::object();

  bool operator==(const Record&) const = default;
};

struct Trace {
  int total_nodes = 0;
  std::vector<Record> records;

  bool operator==(const Trace&) const = default;
};

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_ndjson(std::ostream& out, const Trace& trace);
void write_ndjson_file(const std::string& path, const Trace& trace);
Trace read_ndjson(std::istream& in);
Trace read_ndjson_file(const std::string& path);

}  // namespace mallsim::trace
