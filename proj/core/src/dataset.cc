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

#include "fedsim/dataset.h"

#include <string_view>

#include "fedsim/rng.h"

namespace fedsim {

Dataset Dataset::Subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.task = task;
  out.width = width;
  out.targets.reserve(rows.size());
  if (task == TaskKind::kClassification) {
    out.features.reserve(rows.size() * width);
  } else {
    out.contexts.reserve(rows.size() * width);
  }
  for (std::size_t r : rows) out.Append(*this, r);
  return out;
}

void Dataset::Append(const Dataset& other, std::size_t row) {
  if (task == TaskKind::kClassification) {
    auto src = other.feature_row(row);
    features.insert(features.end(), src.begin(), src.end());
  } else {
    auto src = other.context_row(row);
    contexts.insert(contexts.end(), src.begin(), src.end());
  }
  targets.push_back(other.targets[row]);
}

std::uint64_t Fingerprint(const Dataset& data) {
  auto bytes = [](const auto& v) {
    return std::string_view(reinterpret_cast<const char*>(v.data()),
                            v.size() * sizeof(v[0]));
  };
  std::uint64_t h = Fnv1a64(std::to_string(static_cast<int>(data.task)) + ":" +
                            std::to_string(data.width));
  h = Fnv1a64(bytes(data.features), h);
  h = Fnv1a64(bytes(data.contexts), h);
  h = Fnv1a64(bytes(data.targets), h);
  return h;
}

}  // namespace fedsim
