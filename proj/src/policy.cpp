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

#include <algorithm>
#include <stdexcept>
#include <string>

#include "mallsim/malleability.hpp"

namespace mallsim::malleability {

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::always_grow:
      return "always_grow";
    case PolicyKind::par_efficiency:
      return "par_efficiency";
    case PolicyKind::none:
      return "none";
  }
  return "?";
}

PolicyKind policy_kind_from_string(std::string_view s) {
  if (s == "always_grow") return PolicyKind::always_grow;
  if (s == "par_efficiency") return PolicyKind::par_efficiency;
  if (s == "none") return PolicyKind::none;
  throw std::invalid_argument("unknown policy kind '" + std::string(s) + "'");
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::expand:
      return "EXPAND";
    case Action::shrink:
      return "SHRINK";
    case Action::none:
      return "NONE";
  }
  return "?";
}

void PolicyConfig::validate() const {
  if (!(0.0 <= pe_expand_threshold && pe_expand_threshold < pe_shrink_threshold &&
        pe_shrink_threshold <= 1.0)) {
    throw std::invalid_argument("policy thresholds must satisfy 0 <= expand < shrink <= 1");
  }
  if (nodes_min < 1 || nodes_max < nodes_min) {
    throw std::invalid_argument("policy node limits must satisfy 1 <= min <= max");
  }
  if (iterations_per_node < 1) throw std::invalid_argument("iterations_per_node must be >= 1");
  if (cost_inhibitor && *cost_inhibitor < 0) {
    throw std::invalid_argument("cost inhibitor must be non-negative");
  }
}

ReconfigDecision evaluate_policy(const ClusterView& cluster, const Progress& job,
                                 const PolicyConfig& policy, const AppModel& model) {
  ReconfigDecision result;
  const int current = job.nodes;
  const auto up = model.level_above(current, policy.nodes_max);
  const int expandable = std::min(cluster.free_nodes, cluster.expandable_nodes.value_or(cluster.free_nodes));
  const bool can_expand = up && *up - current <= expandable;

  switch (policy.kind) {
    case PolicyKind::none:
      return result;

    case PolicyKind::always_grow:
      if (can_expand) {
        result.action = Action::expand;
        result.target_nodes = *up;
      }
      return result;

    case PolicyKind::par_efficiency: {
      const double eta = pe_of(model, current);
      std::optional<JobId> beneficiary;
      const auto down = model.level_below(current, policy.nodes_min);
      if (down) {
        // A pending job that needs some of the nodes this job would give up.
        const int released = current - *down;
        for (const auto& p : cluster.pending) {
          if (p.nodes_min > cluster.free_nodes && p.nodes_min <= cluster.free_nodes + released) {
            beneficiary = p.id;
            break;
          }
        }
      }
      if (beneficiary) {
        if (eta < policy.pe_shrink_threshold) {
          result.action = Action::shrink;
          result.target_nodes = *down;
          result.boosted_pending_job = beneficiary;
        }
      } else if (can_expand) {
        if (eta > policy.pe_expand_threshold) {
          result.action = Action::expand;
          result.target_nodes = *up;
        }
      }
      return result;
    }
  }
  return result;
}

std::int64_t inhibitor_iterations(const Progress& job, const PolicyConfig& policy) {
  return policy.iteration_inhibitor ? static_cast<std::int64_t>(job.nodes) * policy.iterations_per_node : 0;
}

Verdict inhibitor_check(const Progress& job, const PolicyConfig& policy, const AppModel& model,
                        const ReconfigDecision& proposed) {
  if (proposed.action == Action::none || !proposed.target_nodes) return {};
  if (job.syncs_since_reconfig < inhibitor_iterations(job, policy)) {
    return {false, "iteration inhibitor: " + std::to_string(job.syncs_since_reconfig) + " of " +
                       std::to_string(inhibitor_iterations(job, policy)) +
                       " sync points since last reconfiguration"};
  }
  if (policy.cost_inhibitor) {
    const Seconds c = model.cost(job.nodes, *proposed.target_nodes);
    if (c > *policy.cost_inhibitor) {
      return {false, "cost inhibitor: " + std::to_string(job.nodes) + "->" +
                         std::to_string(*proposed.target_nodes) + " costs " + std::to_string(c) +
                         " s > " + std::to_string(*policy.cost_inhibitor) + " s"};
    }
  }
  return {};
}

}  // namespace mallsim::malleability
