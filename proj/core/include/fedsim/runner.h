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

#ifndef FEDSIM_RUNNER_H_
#define FEDSIM_RUNNER_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/aggregation.h"
#include "fedsim/config.h"
#include "fedsim/dataset.h"
#include "fedsim/metrics.h"
#include "fedsim/replay.h"

namespace fedsim {

// Wall-clock seconds spent in each phase of a round.
struct PhaseTimings {
  double selection = 0.0;
  double training = 0.0;
  double aggregation = 0.0;
  double bookkeeping = 0.0;  // impact update + contribution normalization
  double evaluation = 0.0;

  PhaseTimings& operator+=(const PhaseTimings& other);
};

struct RoundRecord {
  int round = 0;
  std::vector<AgentId> selected;
  AttentionMatrix attention;
  std::vector<double> impact;        // imp_t, all K agents
  std::vector<double> round_term;    // this round's impact increment
  std::vector<double> contribution;  // con_t, all K agents
  bool measured = true;  // false on rounds skipped by every_n_rounds
  EvalReport eval;
  PhaseTimings timings;
};

struct ShapleyResult {
  ShapleyMode mode;
  std::uint64_t seed = 0;
  std::vector<double> raw;
  std::vector<double> normalized;  // MinMax + softmax, as for contributions
  std::uint64_t evaluations = 0;   // distinct coalitions replayed
  double seconds = 0.0;
};

struct RunRecord {
  std::string run_id;
  ExperimentConfig config;
  std::vector<std::size_t> shard_sizes;
  EvalReport initial_eval;
  std::vector<RoundRecord> rounds;
  std::optional<ShapleyResult> shapley;

  // Not serialized into record.jsonl; trace.bin holds the trace and the
  // evaluation set is regenerated from the config.
  std::shared_ptr<const RunTrace> trace;
  std::shared_ptr<const Dataset> eval;

  const RoundRecord& final_round() const { return rounds.back(); }
  PhaseTimings total_timings() const;
};

// Runs the round loop: select -> local training -> attention ->
// aggregation -> impact/contribution -> evaluation. With a non-empty
// config.output_dir the record is persisted after every round
// (record.jsonl, trace.bin). Module errors surface as RunAbortedError.
RunRecord RunExperiment(const ExperimentConfig& config);

// Post-hoc Shapley estimate over the run's federated characteristic
// function. Stores the result in record.shapley (and on disk if the record
// has an output_dir). Exact mode throws BudgetError above 12 agents.
ShapleyResult RunShapley(RunRecord& record, ShapleyMode mode, std::uint64_t seed,
                         int workers = 1);

}  // namespace fedsim

#endif  // FEDSIM_RUNNER_H_
