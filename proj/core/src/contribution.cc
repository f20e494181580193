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

#include "fedsim/contribution.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "fedsim/errors.h"

namespace fedsim {

ImpactLedger::ImpactLedger(int num_agents) : num_agents_(num_agents) {
  if (num_agents < 1) throw DomainError("impact ledger needs at least one agent");
  const auto k = static_cast<std::size_t>(num_agents);
  ImpactRow base;
  base.round = 0;
  base.impact.assign(k, 0.0);
  base.selected.assign(k, false);
  base.round_term.assign(k, 0.0);
  base.layer_terms.resize(k);
  rows_.push_back(std::move(base));
}

const ImpactRow& ImpactLedger::row(int round) const {
  if (round < 0 || round > latest_round()) {
    throw DomainError("impact ledger has no entry for round " + std::to_string(round));
  }
  return rows_[static_cast<std::size_t>(round)];
}

void ImpactLedger::Append(ImpactRow row) {
  if (row.round != latest_round() + 1) {
    throw StructuralError("impact ledger rows must be appended in round order");
  }
  if (row.impact.size() != static_cast<std::size_t>(num_agents_)) {
    throw StructuralError("impact row has the wrong number of agents");
  }
  rows_.push_back(std::move(row));
}

ImpactLedger UpdateImpact(const ParamSet& server_before, const ParamSet& server_after,
                          const ClientParams& clients, const AttentionMatrix& attention,
                          const AggregationConfig& config, const ImpactOptions& options,
                          const ImpactLedger& ledger, std::span<const AgentId> selected,
                          const StreamFactory& streams, int round) {
  if (!(options.gamma > 0.0 && options.gamma < 1.0)) {
    throw DomainError("forgetting coefficient gamma must lie in (0, 1)");
  }
  RequireCongruent(server_before, server_after, "round_impact");
  const std::size_t layers = server_before.layer_count();
  const int k_total = ledger.num_agents();
  const ImpactRow& previous = ledger.row(ledger.latest_round());

  const auto server_step = LayerNormDiff(server_after, server_before, config.norm_order);
  std::vector<double> denominators(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    denominators[l] = std::log1p(server_step[l] + kImpactDenominatorGuard);
  }
  double total_size = 0.0;
  for (const Layer& layer : server_before.layers()) total_size += static_cast<double>(layer.size());

  ImpactRow row;
  row.round = round;
  row.impact = previous.impact;
  row.selected.assign(static_cast<std::size_t>(k_total), false);
  row.round_term.assign(static_cast<std::size_t>(k_total), 0.0);
  row.layer_terms.resize(static_cast<std::size_t>(k_total));

  const bool noisy = config.dp_weight != 0.0 && config.dp_sigma != 0.0;
  for (AgentId agent : selected) {
    if (agent < 0 || agent >= k_total) {
      throw DomainError("selected agent " + std::to_string(agent) + " out of range");
    }
    auto client = clients.find(agent);
    if (client == clients.end()) {
      throw StructuralError("round_impact: no parameters for agent " + std::to_string(agent));
    }
    RequireCongruent(server_before, client->second, "round_impact");
    const auto index = attention.IndexOf(agent);
    if (!index) {
      throw StructuralError("round_impact: no attention for agent " + std::to_string(agent));
    }
    const auto distance = LayerNormDiff(server_before, client->second, config.norm_order);

    RngStream stream = streams.Derive(options.share_dp_noise ? "dp" : "impact", round, agent);
    std::normal_distribution<double> normal(0.0, noisy ? config.dp_sigma : 1.0);

    std::vector<double> terms(layers);
    double weighted = 0.0;
    for (std::size_t l = 0; l < layers; ++l) {
      const double ratio = std::log1p(distance[l]) / denominators[l];
      const double noise = noisy ? config.dp_weight * normal(stream) : 0.0;
      terms[l] = config.stepsize * attention.at(*index, l) * (ratio + noise);
      if (!std::isfinite(terms[l])) {
        throw NumericError("round_impact: non-finite term for agent " + std::to_string(agent) +
                           " in layer '" + server_before.layer(l).id + "'");
      }
      weighted += static_cast<double>(server_before.layer(l).size()) * terms[l];
    }
    const auto k = static_cast<std::size_t>(agent);
    row.selected[k] = true;
    row.round_term[k] = weighted / total_size;
    row.impact[k] = row.round_term[k] + options.gamma * previous.impact[k];
    row.layer_terms[k] = std::move(terms);
  }

  ImpactLedger next = ledger;
  next.Append(std::move(row));
  return next;
}

ImpactLedger CarryOver(const ImpactLedger& ledger, int round) {
  const ImpactRow& previous = ledger.row(ledger.latest_round());
  ImpactRow row;
  row.round = round;
  row.impact = previous.impact;
  row.selected.assign(previous.impact.size(), false);
  row.round_term.assign(previous.impact.size(), 0.0);
  row.layer_terms.resize(previous.impact.size());
  ImpactLedger next = ledger;
  next.Append(std::move(row));
  return next;
}

std::vector<double> MinMaxSoftmax(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return {};
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw NumericError("contributions: non-finite impact");
  }
  std::vector<double> out(n, 1.0 / static_cast<double>(n));
  if (n < 2 || hi == lo) return out;
  const double range = hi - lo;
  // Scaled values are in [0, 1], so exp needs no max shift.
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp((values[i] - lo) / range);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

std::vector<double> Contributions(const ImpactLedger& ledger, int round) {
  return MinMaxSoftmax(ledger.row(round).impact);
}

}  // namespace fedsim
