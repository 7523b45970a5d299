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
// Naive per-second cluster simulator used as a test oracle. It steps the clock
// one second at a time and shares no scheduling or progress code with the
// library; only the trace record type is reused as its output format.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "mallsim/trace.hpp"

namespace oracle {

using i64 = std::int64_t;

struct App {
  std::vector<int> levels;
  std::vector<i64> step_ms;  // each >= 1000
  i64 steps = 1;
  std::map<std::pair<int, int>, i64> cost;
  std::vector<double> pe;  // optional explicit efficiency per level
};

enum class Rule { none, grow, efficiency };

struct Policy {
  Rule kind = Rule::none;
  double shrink_below = 0.85;
  double expand_above = 0.10;
  bool iteration_hold = false;
  int iterations_per_node = 1;
  std::optional<i64> cost_cap;
  int min = 1;
  int max = 1;
};

struct Job {
  i64 id = 0;
  i64 owner = 0;
  bool generative = false;
  int nodes_min = 1;
  int nodes_max = 1;
  std::optional<i64> run_time;
  std::optional<i64> walltime;
  const App* app = nullptr;
  const Policy* policy = nullptr;
  double base_priority = 0;
};

struct Submission {
  i64 t = 0;
  Job job;
};

struct FeedbackUser {
  i64 user = 0;
  i64 t0 = 0;
  i64 think = 0;
  int count = 1;
  i64 first_id = 1;
  Job tmpl;
};

struct Config {
  int nodes = 1;
  bool easy = true;
  double aging = 1.0;
  bool by_submit_order = true;
  bool spare_only = false;
  bool trace_syncs = false;
  std::optional<i64> horizon;
};

struct Outcome {
  mallsim::trace::Trace trace;
  std::vector<std::vector<i64>> submissions;  // per feedback user
};

Outcome simulate(const Config& cfg, std::vector<Submission> log, const std::vector<FeedbackUser>& users);

}  // namespace oracle
