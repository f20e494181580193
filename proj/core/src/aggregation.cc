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

#include "fedsim/aggregation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "fedsim/errors.h"

namespace fedsim {
namespace {

void RequireClients(const ParamSet& reference, const ClientParams& clients,
                    const char* context) {
  if (clients.empty()) throw StructuralError(std::string(context) + ": no clients");
  for (const auto& [agent, params] : clients) {
    RequireCongruent(reference, params,
                     std::string(context) + " (agent " + std::to_string(agent) + ")");
  }
}

std::vector<std::string> LayerIds(const ParamSet& params) {
  std::vector<std::string> ids;
  for (const Layer& layer : params.layers()) ids.push_back(layer.id);
  return ids;
}

ParamSet Finalize(std::vector<Layer> layers, const char* context) {
  for (const Layer& layer : layers) {
    for (double v : layer.values) {
      if (!std::isfinite(v)) {
        throw NumericError(std::string(context) + " produced a non-finite value in layer '" +
                           layer.id + "'");
      }
    }
  }
  return ParamSet(std::move(layers));
}

}  // namespace

void SelectionPolicy::Validate() const {
  if (total_agents < 1) throw ConfigError("selection: K must be >= 1");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("selection.fraction must be in (0, 1]");
  }
}

int SelectionPolicy::SelectedCount() const {
  // The slack keeps products such as 0.3 * 10 = 3.0000000000000004 from
  // rounding up to 4.
  const double scaled = fraction * static_cast<double>(total_agents);
  const int m = static_cast<int>(std::ceil(scaled - 1e-9));
  return std::clamp(m, 1, total_agents);
}

std::vector<AgentId> SelectAgents(const SelectionPolicy& policy, RngStream& stream) {
  policy.Validate();
  std::vector<AgentId> ids(static_cast<std::size_t>(policy.total_agents));
  std::iota(ids.begin(), ids.end(), 0);
  const auto m = static_cast<std::size_t>(policy.SelectedCount());
  if (m == ids.size()) return ids;
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
    std::swap(ids[i], ids[pick(stream)]);
  }
  ids.resize(m);
  std::sort(ids.begin(), ids.end());
  return ids;
}

AttentionMatrix::AttentionMatrix(std::vector<AgentId> agents,
                                 std::vector<std::string> layer_ids,
                                 std::vector<double> alpha)
    : agents_(std::move(agents)), layer_ids_(std::move(layer_ids)), alpha_(std::move(alpha)) {
  if (alpha_.size() != agents_.size() * layer_ids_.size()) {
    throw StructuralError("attention matrix size does not match agents x layers");
  }
}

std::optional<std::size_t> AttentionMatrix::IndexOf(AgentId agent) const {
  auto it = std::find(agents_.begin(), agents_.end(), agent);
  if (it == agents_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - agents_.begin());
}

double AttentionMatrix::alpha(AgentId agent, std::size_t layer) const {
  auto index = IndexOf(agent);
  if (!index) throw StructuralError("agent " + std::to_string(agent) + " has no attention");
  return at(*index, layer);
}

void AggregationConfig::Validate() const {
  if (!(stepsize > 0.0)) throw ConfigError("aggregation.stepsize must be > 0");
  if (!(dp_weight >= 0.0)) throw ConfigError("aggregation.dp_weight must be >= 0");
  if (!(dp_sigma >= 0.0)) throw ConfigError("aggregation.dp_sigma must be >= 0");
  if (!(norm_order >= 1.0)) throw ConfigError("aggregation.norm_order must be >= 1");
}

AttentionMatrix ComputeAttention(const ParamSet& server, const ClientParams& clients,
                                 double norm_order, bool negate_scores) {
  RequireClients(server, clients, "compute_attention");
  const std::size_t layers = server.layer_count();
  const std::size_t m = clients.size();
  std::vector<AgentId> agents;
  std::vector<double> scores(m * layers);
  std::size_t k = 0;
  for (const auto& [agent, params] : clients) {
    agents.push_back(agent);
    const auto s = LayerNormDiff(server, params, norm_order);
    for (std::size_t l = 0; l < layers; ++l) scores[k * layers + l] = negate_scores ? -s[l] : s[l];
    ++k;
  }
  std::vector<double> alpha(m * layers);
  for (std::size_t l = 0; l < layers; ++l) {
    double top = scores[l];
    for (std::size_t i = 1; i < m; ++i) top = std::max(top, scores[i * layers + l]);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      alpha[i * layers + l] = std::exp(scores[i * layers + l] - top);
      total += alpha[i * layers + l];
    }
    for (std::size_t i = 0; i < m; ++i) alpha[i * layers + l] /= total;
  }
  return AttentionMatrix(std::move(agents), LayerIds(server), std::move(alpha));
}

AttentionMatrix UniformAttention(const ParamSet& server, const ClientParams& clients) {
  RequireClients(server, clients, "uniform_attention");
  std::vector<AgentId> agents;
  for (const auto& entry : clients) agents.push_back(entry.first);
  std::vector<double> alpha(agents.size() * server.layer_count(),
                            1.0 / static_cast<double>(agents.size()));
  return AttentionMatrix(std::move(agents), LayerIds(server), std::move(alpha));
}

ParamSet AttentionAggregate(const ParamSet& server, const ClientParams& clients,
                            const AttentionMatrix& attention,
                            const AggregationConfig& config,
                            const StreamFactory& streams, int round) {
  config.Validate();
  RequireClients(server, clients, "attention_aggregate");
  if (attention.agent_count() != clients.size() ||
      attention.layer_count() != server.layer_count()) {
    throw StructuralError("attention_aggregate: attention does not cover the client set");
  }
  const bool noisy = config.dp_weight != 0.0;
  std::vector<Layer> out(server.layers().begin(), server.layers().end());
  std::vector<std::vector<double>> acc(out.size());
  for (std::size_t l = 0; l < out.size(); ++l) acc[l].assign(out[l].size(), 0.0);

  for (const auto& [agent, params] : clients) {
    const auto index = attention.IndexOf(agent);
    if (!index) {
      throw StructuralError("attention_aggregate: no attention for agent " +
                            std::to_string(agent));
    }
    std::optional<ParamSet> noise;
    if (noisy) {
      RngStream stream = streams.Derive("dp", round, agent);
      noise.emplace(GaussianLike(server, config.dp_sigma, stream));
    }
    for (std::size_t l = 0; l < out.size(); ++l) {
      const double a = attention.at(*index, l);
      const auto& w = server.layer(l).values;
      const auto& wk = params.layer(l).values;
      auto& sum = acc[l];
      if (noisy) {
        const auto& n = noise->layer(l).values;
        for (std::size_t i = 0; i < sum.size(); ++i) {
          sum[i] += a * (w[i] - wk[i] + config.dp_weight * n[i]);
        }
      } else {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += a * (w[i] - wk[i]);
      }
    }
  }
  for (std::size_t l = 0; l < out.size(); ++l) {
    auto& values = out[l].values;
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= config.stepsize * acc[l][i];
  }
  return Finalize(std::move(out), "attention_aggregate");
}

ParamSet FedAvgAggregate(const ClientParams& clients) {
  if (clients.empty()) throw StructuralError("fedavg_aggregate: no clients");
  std::map<AgentId, double> ones;
  for (const auto& entry : clients) ones[entry.first] = 1.0;
  return WeightedFedAvgAggregate(clients, ones);
}

ParamSet WeightedFedAvgAggregate(const ClientParams& clients,
                                 const std::map<AgentId, double>& weights) {
  if (clients.empty()) throw StructuralError("fedavg_aggregate: no clients");
  const ParamSet& first = clients.begin()->second;
  RequireClients(first, clients, "fedavg_aggregate");
  double total = 0.0;
  for (const auto& entry : clients) {
    auto it = weights.find(entry.first);
    if (it == weights.end() || !(it->second > 0.0)) {
      throw DomainError("fedavg_aggregate: missing or non-positive weight for agent " +
                        std::to_string(entry.first));
    }
    total += it->second;
  }
  std::vector<Layer> out(first.layers().begin(), first.layers().end());
  for (Layer& layer : out) std::fill(layer.values.begin(), layer.values.end(), 0.0);
  for (const auto& [agent, params] : clients) {
    const double c = weights.at(agent) / total;
    for (std::size_t l = 0; l < out.size(); ++l) {
      const auto& src = params.layer(l).values;
      auto& dst = out[l].values;
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += c * src[i];
    }
  }
  return Finalize(std::move(out), "fedavg_aggregate");
}

}  // namespace fedsim
