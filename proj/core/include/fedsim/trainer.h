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

#ifndef FEDSIM_TRAINER_H_
#define FEDSIM_TRAINER_H_

#include "fedsim/dataset.h"
#include "fedsim/model.h"
#include "fedsim/params.h"
#include "fedsim/rng.h"

namespace fedsim {

struct TrainerConfig {
  int local_epochs = 1;  // E
  int batch_size = 128;  // B
  double learning_rate = 0.05;  // eta

  void Validate() const;
};

// E epochs of mini-batch SGD on `shard` starting from `global_params`. The
// shard is reshuffled from `stream` every epoch; the last partial batch is
// kept. Pure: neither input is modified.
ParamSet ClientUpdate(const ModelSpec& spec, const ParamSet& global_params,
                      const Dataset& shard, const TrainerConfig& config,
                      RngStream& stream);

}  // namespace fedsim

#endif  // FEDSIM_TRAINER_H_
