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

#ifndef FEDSIM_CONTRIBUTION_H_
#define FEDSIM_CONTRIBUTION_H_

#include <span>
#include <vector>

#include "fedsim/aggregation.h"
#include "fedsim/params.h"
#include "fedsim/rng.h"

namespace fedsim {

// Guard added inside the denominator log so an unchanged server model does
// not divide by zero.
inline constexpr double kImpactDenominatorGuard = 1e-12;

// One end-of-round entry of the ledger.
struct ImpactRow {
  int round = 0;
  std::vector<double> impact;     // imp_t^k for every agent k
  std::vector<bool> selected;     // k in S_t
  std::vector<double> round_term;  // this round's increment (0 if unselected)
  // Per-layer terms, one vector per agent (empty for unselected agents).
  std::vector<std::vector<double>> layer_terms;

  friend bool operator==(const ImpactRow&, const ImpactRow&) = default;
};

// Cumulative impact of every agent. Row 0 is the all-zero base; row t holds
// imp_t. Value type: UpdateImpact returns an extended copy.
class ImpactLedger {
 public:
  explicit ImpactLedger(int num_agents);

  int num_agents() const { return num_agents_; }
  // Index of the newest row (0 before any update).
  int latest_round() const { return rows_.back().round; }
  const ImpactRow& row(int round) const;
  std::span<const double> impact() const { return rows_.back().impact; }
  const std::vector<ImpactRow>& rows() const { return rows_; }

  void Append(ImpactRow row);

  friend bool operator==(const ImpactLedger&, const ImpactLedger&) = default;

 private:
  int num_agents_;
  std::vector<ImpactRow> rows_;
};

struct ImpactOptions {
  double gamma = 0.7;
  // Draw the beta-noise from the aggregation ("dp") streams instead of a
  // dedicated "impact" stream.
  bool share_dp_noise = false;
};

// The impact recurrence for round `round` (which must be latest_round()+1):
//
//   term_k^l = eps * alpha_k^l * ( ln(||w_t^l - w_k^l||_p + 1)
//                                  / ln(||w_{t+1}^l - w_t^l||_p + 1 + guard)
//                                  + beta * nu_k^l ),   nu_k^l ~ N(0, sigma^2)
//   term_k   = sum_l n_l * term_k^l / sum_l n_l        (n_l = layer size)
//   imp_t^k  = term_k + gamma * imp_{t-1}^k             for k in S_t
//   imp_t^k  = imp_{t-1}^k                              otherwise
ImpactLedger UpdateImpact(const ParamSet& server_before, const ParamSet& server_after,
                          const ClientParams& clients, const AttentionMatrix& attention,
                          const AggregationConfig& config, const ImpactOptions& options,
                          const ImpactLedger& ledger, std::span<const AgentId> selected,
                          const StreamFactory& streams, int round);

// Carries every agent's impact over unchanged into a new row (used on
// rounds where the measurement does not run).
ImpactLedger CarryOver(const ImpactLedger& ledger, int round);

// x = MinMax(values) in [0, 1], then softmax(x). All-equal input (or a single
// entry) yields the uniform vector.
std::vector<double> MinMaxSoftmax(std::span<const double> values);

// con_t = softmax(minmax(imp_t)).
std::vector<double> Contributions(const ImpactLedger& ledger, int round);

}  // namespace fedsim

#endif  // FEDSIM_CONTRIBUTION_H_
