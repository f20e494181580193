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

#ifndef FEDSIM_REPLAY_H_
#define FEDSIM_REPLAY_H_

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "fedsim/aggregation.h"
#include "fedsim/dataset.h"
#include "fedsim/model.h"
#include "fedsim/params.h"
#include "fedsim/shapley.h"

namespace fedsim {

enum class Aggregator { kAttention, kFedAvg };

// What the server saw in one round.
struct RoundTrace {
  int round = 0;
  ParamSet server_before;
  ClientParams clients;  // uploaded parameters of the selected agents
  AttentionMatrix attention;
};

// Everything needed to re-run the server side of a finished run.
struct RunTrace {
  ModelSpec model;
  AggregationConfig aggregation;
  Aggregator aggregator = Aggregator::kAttention;
  bool weighted_fedavg = false;
  std::map<AgentId, double> shard_sizes;
  std::uint64_t master_seed = 0;
  int num_agents = 0;
  std::vector<RoundTrace> rounds;
};

// Re-runs every recorded round, aggregating only the uploads of agents in
// `coalition` (bit i = agent i). An upload w_k recorded against server w_t is
// replayed as w' + (w_k - w_t) on the coalition's server w'. Attention is
// restricted to the coalition and renormalized per layer; rounds where no
// coalition member was selected leave the server unchanged. The full
// coalition reproduces the recorded trajectory bit for bit.
ParamSet ReplayCoalition(const RunTrace& trace, Coalition coalition);

// Held-out utility: accuracy, or -log2(perplexity) for next-token models
// (higher is better for both).
double Utility(const ModelSpec& spec, const ParamSet& params, const Dataset& eval);

// Delta_Q = Utility(ReplayCoalition(trace, Q)); Delta_empty is the utility of
// the initial model.
CharacteristicFn MakeFederatedCharacteristic(std::shared_ptr<const RunTrace> trace,
                                             std::shared_ptr<const Dataset> eval);

}  // namespace fedsim

#endif  // FEDSIM_REPLAY_H_
