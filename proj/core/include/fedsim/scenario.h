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

#ifndef FEDSIM_SCENARIO_H_
#define FEDSIM_SCENARIO_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedsim/aggregation.h"
#include "fedsim/dataset.h"
#include "fedsim/rng.h"

namespace fedsim {

enum class Treatment { kFeatureNoise, kMislabel, kReduce, kShuffleTokens };

std::string_view TreatmentName(Treatment treatment);
Treatment ParseTreatment(std::string_view name);

// `magnitude` is the affected fraction of the shard: rows replaced by noise,
// labels flipped, tokens randomized, or (for kReduce) rows removed.
struct Corruption {
  std::vector<AgentId> agents;
  Treatment treatment = Treatment::kFeatureNoise;
  double magnitude = 1.0;

  friend bool operator==(const Corruption&, const Corruption&) = default;
};

// Read training data from disk instead of the synthetic generators.
//   format "csv":    one example per line, "label,f1,f2,...,fd"; blank lines
//                    and lines starting with '#' are skipped, as is a first
//                    line whose label field is not an integer (header).
//   format "tokens": whitespace-separated words; the vocabulary is the sorted
//                    set of distinct words and examples are sliding windows
//                    of context_window words followed by the next word.
// Rows are shuffled, eval_fraction of them held out, the rest split evenly.
struct ExternalSource {
  std::string format;
  std::string path;
  double eval_fraction = 0.2;

  friend bool operator==(const ExternalSource&, const ExternalSource&) = default;
};

struct ScenarioSpec {
  TaskKind task = TaskKind::kClassification;
  int num_agents = 10;  // K
  int samples_per_agent = 500;
  int eval_samples = 1000;
  std::vector<Corruption> corruptions;

  // Gaussian blobs: class means ~ N(0, separation^2 I), unit-variance
  // isotropic noise around each mean.
  int num_classes = 10;
  int feature_dim = 20;
  double class_separation = 1.0;

  // Synthetic grammar: first-order Markov chain in which every token has
  // `successors` possible continuations with random weights.
  int vocabulary = 24;
  int context_window = 3;
  int successors = 3;

  std::optional<ExternalSource> external;

  void Validate() const;
  int label_count() const;

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

struct ScenarioData {
  std::vector<Dataset> shards;  // one per agent
  Dataset eval;                 // clean held-out data
  int label_count = 0;          // classes or vocabulary size
  std::size_t input_width = 0;  // features or context tokens per row
};

// Clean, equal-sized, disjoint shards plus an evaluation set.
ScenarioData GenerateDataset(const ScenarioSpec& spec, RngStream& stream);

// Applies spec.corruptions in order. Agents not listed are returned
// unchanged.
std::vector<Dataset> ApplyCorruptions(std::vector<Dataset> shards, const ScenarioSpec& spec,
                                      RngStream& stream);

// Generation from streams "data" and corruption from "corrupt".
ScenarioData BuildScenario(const ScenarioSpec& spec, const StreamFactory& streams);

struct PresetInfo {
  std::string name;
  std::string description;
};

std::vector<PresetInfo> ListPresets();
// Throws ConfigError for unknown names.
ScenarioSpec ScenarioPreset(std::string_view name);

}  // namespace fedsim

#endif  // FEDSIM_SCENARIO_H_
