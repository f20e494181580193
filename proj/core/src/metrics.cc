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

#include "fedsim/metrics.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedsim/errors.h"

namespace fedsim {
namespace {

void CheckShape(const Matrix& predictions, std::span<const int> targets) {
  if (targets.empty()) throw DomainError("metric over an empty evaluation set");
  if (predictions.rows != targets.size() ||
      predictions.values.size() != predictions.rows * predictions.cols) {
    throw DomainError("prediction rows do not match target count");
  }
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= predictions.cols) {
      throw DataError("target id " + std::to_string(t) + " out of range");
    }
  }
}

}  // namespace

std::string_view MetricName(MetricKind kind) {
  return kind == MetricKind::kAccuracy ? "accuracy" : "perplexity";
}

double Accuracy(const Matrix& predictions, std::span<const int> targets) {
  CheckShape(predictions, targets);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < predictions.rows; ++r) {
    auto row = predictions.row(r);
    // max_element returns the first maximum.
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    if (best == targets[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(targets.size());
}

double Perplexity(const Matrix& predictions, std::span<const int> targets) {
  CheckShape(predictions, targets);
  double bits = 0.0;
  for (std::size_t r = 0; r < predictions.rows; ++r) {
    const double p = predictions.row(r)[static_cast<std::size_t>(targets[r])];
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw NumericError("invalid predicted probability at row " + std::to_string(r));
    }
    bits -= std::log2(std::max(p, kProbabilityFloor));
  }
  return std::exp2(bits / static_cast<double>(targets.size()));
}

EvalReport Evaluate(const ModelSpec& spec, const ParamSet& params, const Dataset& eval,
                    int round) {
  const Matrix probs = PredictDistribution(spec, params, eval);
  EvalReport report;
  report.round = round;
  report.sample_count = eval.size();
  if (spec.kind == TaskKind::kClassification) {
    report.kind = MetricKind::kAccuracy;
    report.value = Accuracy(probs, eval.targets);
  } else {
    report.kind = MetricKind::kPerplexity;
    report.value = Perplexity(probs, eval.targets);
  }
  return report;
}

}  // namespace fedsim
