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
// Regenerates a golden trace: prepares a scenario's workload and replays it
// through the naive oracle.
//
//   oracle_golden <config.json> <out.ndjson>

#include <exception>
#include <iostream>

#include "from_scenario.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: oracle_golden <config.json> <out.ndjson>\n";
    return 2;
  }
  try {
    const auto s = mallsim::scenario::load_scenario(argv[1]);
    const auto w = mallsim::scenario::prepare_workload(s);
    auto in = oracle::inputs_for(s, w.log);
    const auto out = oracle::simulate(in.cfg, std::move(in.log), in.users);
    mallsim::trace::write_ndjson_file(argv[2], out.trace);
  } catch (const std::exception& e) {
    std::cerr << "oracle_golden: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
