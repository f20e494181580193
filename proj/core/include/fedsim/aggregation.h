/*
 * Copyright 2026 The fedsim Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDSIM_AGGREGATION_H_
#define FEDSIM_AGGREGATION_H_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/params.h"
#include "fedsim/rng.h"

namespace fedsim {

using AgentId = int;

// Uploaded client parameters keyed by agent id. Ordered, so iteration order
// (and therefore floating-point summation order) is fixed.
using ClientParams = std::map<AgentId, ParamSet>;

struct SelectionPolicy {
  double fraction = 1.0;  // C, in (0, 1]
  int total_agents = 10;  // K

  void Validate() const;
  // m = max(ceil(C * K), 1).
  int SelectedCount() const;
};

// m distinct agent ids drawn uniformly without replacement, ascending.
std::vector<AgentId> SelectAgents(const SelectionPolicy& policy, RngStream& stream);

// alpha_k^l for the selected agents. For every layer the column over agents
// sums to one.
class AttentionMatrix {
 public:
  AttentionMatrix() = default;
  AttentionMatrix(std::vector<AgentId> agents, std::vector<std::string> layer_ids,
                  std::vector<double> alpha);

  const std::vector<AgentId>& agents() const { return agents_; }
  const std::vector<std::string>& layer_ids() const { return layer_ids_; }
  std::size_t agent_count() const { return agents_.size(); }
  std::size_t layer_count() const { return layer_ids_.size(); }

  // By position in agents().
  double at(std::size_t agent_index, std::size_t layer) const {
    return alpha_[agent_index * layer_ids_.size() + layer];
  }
  // By agent id; nullopt when the agent is not covered.
  std::optional<std::size_t> IndexOf(AgentId agent) const;
  double alpha(AgentId agent, std::size_t layer) const;

  const std::vector<double>& values() const { return alpha_; }

  friend bool operator==(const AttentionMatrix&, const AttentionMatrix&) = default;

 private:
  std::vector<AgentId> agents_;
  std::vector<std::string> layer_ids_;
  std::vector<double> alpha_;  // agents x layers
};

struct AggregationConfig {
  double stepsize = 1.2;    // epsilon
  double dp_weight = 0.001;  // beta
  double dp_sigma = 1.0;     // sigma
  double norm_order = 2.0;   // p
  // Feed -s instead of s into the attention softmax.
  bool negate_scores = false;

  void Validate() const;
};

// Per layer: s_k = ||w^l - w_k^l||_p, alpha^l = softmax_k(s_k).
AttentionMatrix ComputeAttention(const ParamSet& server, const ClientParams& clients,
                                 double norm_order, bool negate_scores = false);

AttentionMatrix UniformAttention(const ParamSet& server, const ClientParams& clients);

// w_{t+1}^l = w_t^l - eps * sum_k alpha_k^l (w_t^l - w_k^l + beta * noise_k^l),
// noise_k ~ N(0, sigma^2) drawn from streams.Derive("dp", round, k).
// beta == 0 skips the noise entirely.
ParamSet AttentionAggregate(const ParamSet& server, const ClientParams& clients,
                            const AttentionMatrix& attention,
                            const AggregationConfig& config,
                            const StreamFactory& streams, int round);

// Unweighted elementwise mean.
ParamSet FedAvgAggregate(const ClientParams& clients);

// Mean weighted by `weights` (e.g. shard sizes); weights must be positive.
ParamSet WeightedFedAvgAggregate(const ClientParams& clients,
                                 const std::map<AgentId, double>& weights);

}  // namespace fedsim

#endif  // FEDSIM_AGGREGATION_H_
