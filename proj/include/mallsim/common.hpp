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

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mallsim {

/// Simulated time, in whole seconds of (already scaled) replay time.
using Seconds = std::int64_t;
using JobId = std::int64_t;
using UserId = std::int64_t;

/// Which workload a job belongs to: the replayed log or a feedback-driven user.
enum class JobClass { baseline, generative };

std::string_view to_string(JobClass c);
JobClass job_class_from_string(std::string_view s);

/// Integer ceiling division for non-negative numerators and positive divisors.
constexpr std::int64_t ceil_div(std::int64_t num, std::int64_t den) {
  return (num + den - 1) / den;
}

}  // namespace mallsim
