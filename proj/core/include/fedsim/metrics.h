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

#ifndef FEDSIM_METRICS_H_
#define FEDSIM_METRICS_H_

#include <cstddef>
#include <span>
#include <string_view>

#include "fedsim/dataset.h"
#include "fedsim/model.h"
#include "fedsim/params.h"

namespace fedsim {

enum class MetricKind { kAccuracy, kPerplexity };

std::string_view MetricName(MetricKind kind);

struct EvalReport {
  MetricKind kind = MetricKind::kAccuracy;
  double value = 0.0;
  std::size_t sample_count = 0;
  int round = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Predicted probabilities are floored here before taking logs, which caps
// the reported perplexity at 2^40.
inline constexpr double kProbabilityFloor = 1e-12;

// Fraction of rows whose argmax (lowest index on ties) equals the target.
double Accuracy(const Matrix& predictions, std::span<const int> targets);

// 2^( -(1/N) sum_n log2 m(target_n) ).
double Perplexity(const Matrix& predictions, std::span<const int> targets);

// Accuracy for classifiers, perplexity for next-token models.
EvalReport Evaluate(const ModelSpec& spec, const ParamSet& params, const Dataset& eval,
                    int round);

}  // namespace fedsim

#endif  // FEDSIM_METRICS_H_
