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

#include "fedsim/trainer.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "fedsim/errors.h"

namespace fedsim {

void TrainerConfig::Validate() const {
  if (local_epochs < 1) throw ConfigError("trainer.local_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("trainer.batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("trainer.learning_rate must be finite and >= 0");
  }
}

ParamSet ClientUpdate(const ModelSpec& spec, const ParamSet& global_params,
                      const Dataset& shard, const TrainerConfig& config,
                      RngStream& stream) {
  config.Validate();
  if (shard.empty()) throw ScenarioError("client_update: agent owns no data");
  RequireLayout(spec, global_params);

  ParamSet w = global_params;
  std::vector<std::size_t> order(shard.size());
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), stream);
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      const Batch b = shard.Subset(std::span(order).subspan(begin, end - begin));
      if (config.learning_rate == 0.0) continue;
      const auto step = LossAndGrad(spec, w, b);
      const std::array<ScaledDelta, 1> terms{ScaledDelta{-config.learning_rate, step.grad}};
      w = AxpyCombine(w, terms);
    }
  }
  return w;
}

}  // namespace fedsim
