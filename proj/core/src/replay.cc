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

#include "fedsim/replay.h"

#include <array>
#include <cmath>
#include <utility>

#include "fedsim/errors.h"
#include "fedsim/metrics.h"

namespace fedsim {
namespace {

AttentionMatrix RestrictAttention(const AttentionMatrix& full, const ClientParams& subset) {
  const std::size_t layers = full.layer_count();
  std::vector<AgentId> agents;
  std::vector<double> alpha;
  for (const auto& entry : subset) {
    agents.push_back(entry.first);
    const std::size_t index = *full.IndexOf(entry.first);
    for (std::size_t l = 0; l < layers; ++l) alpha.push_back(full.at(index, l));
  }
  for (std::size_t l = 0; l < layers; ++l) {
    double total = 0.0;
    for (std::size_t k = 0; k < agents.size(); ++k) total += alpha[k * layers + l];
    for (std::size_t k = 0; k < agents.size(); ++k) alpha[k * layers + l] /= total;
  }
  return AttentionMatrix(std::move(agents), full.layer_ids(), std::move(alpha));
}

}  // namespace

ParamSet ReplayCoalition(const RunTrace& trace, Coalition coalition) {
  if (trace.rounds.empty()) throw StructuralError("replay: empty run trace");
  const StreamFactory streams(trace.master_seed);
  ParamSet server = trace.rounds.front().server_before;
  for (const RoundTrace& round : trace.rounds) {
    // Once the coalition's server has left the recorded trajectory, each
    // upload is re-based: the recorded local update is applied to the
    // coalition's own server instead of the one the agent actually saw.
    const bool on_track = server == round.server_before;
    ClientParams subset;
    for (const auto& [agent, params] : round.clients) {
      if (!((coalition >> agent) & 1U)) continue;
      if (on_track) {
        subset.emplace(agent, params);
      } else {
        const std::array<ScaledDelta, 2> update{ScaledDelta{1.0, params},
                                                ScaledDelta{-1.0, round.server_before}};
        subset.emplace(agent, AxpyCombine(server, update));
      }
    }
    if (subset.empty()) continue;
    const bool complete = subset.size() == round.clients.size();
    if (trace.aggregator == Aggregator::kAttention) {
      if (complete) {
        server = AttentionAggregate(server, subset, round.attention, trace.aggregation, streams,
                                    round.round);
      } else {
        server = AttentionAggregate(server, subset, RestrictAttention(round.attention, subset),
                                    trace.aggregation, streams, round.round);
      }
    } else if (trace.weighted_fedavg) {
      server = WeightedFedAvgAggregate(subset, trace.shard_sizes);
    } else {
      server = FedAvgAggregate(subset);
    }
  }
  return server;
}

double Utility(const ModelSpec& spec, const ParamSet& params, const Dataset& eval) {
  const EvalReport report = Evaluate(spec, params, eval, 0);
  if (report.kind == MetricKind::kAccuracy) return report.value;
  return -std::log2(report.value);
}

CharacteristicFn MakeFederatedCharacteristic(std::shared_ptr<const RunTrace> trace,
                                             std::shared_ptr<const Dataset> eval) {
  if (!trace || trace->rounds.empty()) {
    throw StructuralError("federated characteristic needs a non-empty run trace");
  }
  if (!eval || eval->empty()) {
    throw StructuralError("federated characteristic needs an evaluation set");
  }
  return CharacteristicFn(trace->num_agents, [trace, eval](Coalition q) {
    return Utility(trace->model, ReplayCoalition(*trace, q), *eval);
  });
}

}  // namespace fedsim
