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

#include <sstream>

#include "instances.hpp"
#include "mallsim/trace.hpp"

using namespace mallsim;
using trace::Kind;

namespace {

trace::Trace parse(const std::string& text) {
  std::istringstream in(text);
  return trace::read_ndjson(in);
}

const char* kHeader = R"({"format":"mallsim-trace","version":1,"total_nodes":4})"
                      "\n";

}  // namespace

TEST_CASE("kind names round trip") {
  for (Kind k : {Kind::submit, Kind::start, Kind::reconfig, Kind::end, Kind::sync, Kind::reject}) {
    CHECK(trace::kind_from_string(trace::to_string(k)) == k);
  }
  CHECK_THROWS_AS(trace::kind_from_string("pause"), trace::TraceError);
}

TEST_CASE("ndjson round trip of random runs") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto t = oracle::run_engine(oracle::random_instance(seed)).result.trace;
    std::ostringstream out;
    trace::write_ndjson(out, t);
    const auto back = parse(out.str());
    CHECK(back == t);
    std::ostringstream again;
    trace::write_ndjson(again, back);
    CHECK(again.str() == out.str());
  }
}

TEST_CASE("record layout") {
  trace::Trace t;
  t.total_nodes = 2;
  t.records.push_back({3, Kind::end, 9, 2, {{"steps", 5}}});
  std::ostringstream out;
  trace::write_ndjson(out, t);
  CHECK(out.str() == std::string(R"({"format":"mallsim-trace","version":1,"total_nodes":2})"
                                 "\n"
                                 R"({"t":3,"kind":"end","job":9,"nodes":2,"detail":{"steps":5}})"
                                 "\n"));
}

TEST_CASE("blank lines are skipped") {
  const auto t = parse(std::string(kHeader) + "\n" + R"({"t":0,"kind":"submit","job":1,"nodes":1,"detail":{}})" +
                       "\n\n");
  CHECK(t.total_nodes == 4);
  CHECK(t.records.size() == 1);
}

TEST_CASE("malformed traces are reported with line numbers") {
  auto fails_with = [](const std::string& text, const std::string& needle) {
    try {
      parse(text);
      FAIL("expected a trace error");
    } catch (const trace::TraceError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
  };
  fails_with("", "empty trace");
  fails_with(R"({"t":0})"
             "\n",
             "header");
  fails_with(R"({"format":"mallsim-trace","version":2,"total_nodes":4})"
             "\n",
             "version 2");
  fails_with(std::string(kHeader) + "{not json\n", "line 2");
  fails_with(std::string(kHeader) + R"({"t":0,"kind":"submit","job":1,"detail":{}})" + "\n", "line 2");
  fails_with(std::string(kHeader) + R"({"t":0,"kind":"hover","job":1,"nodes":1,"detail":{}})" + "\n", "hover");
  CHECK_THROWS_AS(trace::read_ndjson_file("/nonexistent/trace.ndjson"), trace::TraceError);
}
