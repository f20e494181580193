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

#ifndef FEDSIM_DATASET_H_
#define FEDSIM_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fedsim {

enum class TaskKind { kClassification, kNextToken };

// Row-major dense matrix; used for predicted probability distributions.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }
  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
};

// A set of supervised examples. Classification rows carry `width` real
// features; next-token rows carry `width` context token ids. Only the vector
// matching `task` is populated.
struct Dataset {
  TaskKind task = TaskKind::kClassification;
  std::size_t width = 0;
  std::vector<double> features;
  std::vector<int> contexts;
  std::vector<int> targets;

  std::size_t size() const { return targets.size(); }
  bool empty() const { return targets.empty(); }

  std::span<const double> feature_row(std::size_t r) const {
    return {features.data() + r * width, width};
  }
  std::span<const int> context_row(std::size_t r) const {
    return {contexts.data() + r * width, width};
  }

  Dataset Subset(std::span<const std::size_t> rows) const;
  void Append(const Dataset& other, std::size_t row);

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// A mini-batch is just a small dataset.
using Batch = Dataset;

std::uint64_t Fingerprint(const Dataset& data);

}  // namespace fedsim

#endif  // FEDSIM_DATASET_H_
