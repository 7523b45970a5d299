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

#include "mallsim/common.hpp"

namespace mallsim {

std::string_view to_string(JobClass c) {
  return c == JobClass::baseline ? "baseline" : "generative";
}

JobClass job_class_from_string(std::string_view s) {
  if (s == "baseline") return JobClass::baseline;
  if (s == "generative") return JobClass::generative;
  throw std::invalid_argument("unknown job class '" + std::string(s) + "'");
}

}  // namespace mallsim

