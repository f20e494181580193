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

#ifndef FEDSIM_CONFIG_H_
#define FEDSIM_CONFIG_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "fedsim/aggregation.h"
#include "fedsim/model.h"
#include "fedsim/replay.h"
#include "fedsim/scenario.h"
#include "fedsim/trainer.h"

namespace fedsim {

struct ShapleyMode {
  enum class Kind { kOff, kExact, kMonteCarlo };
  Kind kind = Kind::kOff;
  int iterations = 0;  // Monte Carlo only

  // "off", "exact" or "mc(M)".
  static ShapleyMode Parse(std::string_view text);
  std::string ToString() const;

  friend bool operator==(const ShapleyMode&, const ShapleyMode&) = default;
};

// A complete experiment. Defaults follow the reference hyperparameters:
// K=10, 10 rounds, E=1, C=1, B=128, eps=1.2, beta=0.001, gamma=0.7.
struct ExperimentConfig {
  std::string preset = "normal";
  ScenarioSpec scenario;
  ModelSpec model;
  TrainerConfig trainer;
  AggregationConfig aggregation;
  double selection_fraction = 1.0;  // C
  double gamma = 0.7;
  int rounds = 10;
  std::uint64_t master_seed = 1;
  Aggregator aggregator = Aggregator::kAttention;
  bool weighted_fedavg = false;
  ShapleyMode shapley;
  bool share_dp_noise = false;
  int contribution_every_n_rounds = 1;
  std::string output_dir;
  int workers = 1;

  SelectionPolicy selection() const { return {selection_fraction, scenario.num_agents}; }
  void Validate() const;
};

// The model used for a scenario unless the config overrides it.
ModelSpec DefaultModelFor(const ScenarioSpec& scenario);

// Preset scenario with its default model and all other defaults.
ExperimentConfig DefaultConfig(std::string_view preset = "normal");

// Parses a JSON config document (see README for the schema). Keys absent
// from the document keep the defaults of its "preset". Each override is
// "dotted.key=value"; the value is read as JSON when it parses, otherwise as
// a string. Throws ConfigError on malformed input or unknown keys.
ExperimentConfig ParseConfig(std::string_view json_text,
                             std::span<const std::string> overrides = {});

std::string SerializeConfig(const ExperimentConfig& config);

// SerializeConfig minus fields that cannot affect results (output_dir,
// workers), hashed.
std::string RunId(const ExperimentConfig& config);

}  // namespace fedsim

#endif  // FEDSIM_CONFIG_H_
