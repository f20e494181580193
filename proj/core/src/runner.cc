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

#include "fedsim/runner.h"

#include <atomic>
#include <chrono>
#include <exception>
#include <memory>
#include <thread>
#include <utility>

#include "fedsim/contribution.h"
#include "fedsim/errors.h"
#include "fedsim/model.h"
#include "fedsim/record_io.h"
#include "fedsim/scenario.h"
#include "fedsim/shapley.h"
#include "fedsim/trainer.h"

namespace fedsim {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

// Runs one ClientUpdate per selected agent on up to `workers` threads. Every
// agent trains from its own derived stream, so the result does not depend on
// the schedule.
ClientParams TrainSelected(const ExperimentConfig& config, const ParamSet& global,
                           const std::vector<Dataset>& shards,
                           const std::vector<AgentId>& selected, const StreamFactory& streams,
                           int round) {
  std::vector<std::optional<ParamSet>> results(selected.size());
  std::vector<std::exception_ptr> errors(selected.size());
  auto train = [&](std::size_t i) {
    try {
      const AgentId agent = selected[i];
      RngStream stream = streams.Derive("train", round, agent);
      results[i].emplace(ClientUpdate(config.model, global,
                                      shards[static_cast<std::size_t>(agent)], config.trainer,
                                      stream));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.workers),
                                             selected.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < selected.size(); ++i) train(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < selected.size(); i = next.fetch_add(1)) {
          train(i);
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  ClientParams clients;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    clients.emplace(selected[i], std::move(*results[i]));
  }
  return clients;
}

void CheckDataMatchesModel(const ExperimentConfig& config, const ScenarioData& data) {
  const ModelSpec& m = config.model;
  const auto width = m.kind == TaskKind::kClassification ? m.input_dim : m.context_window;
  if (static_cast<int>(data.input_width) != width || data.label_count > m.output_dim) {
    throw ConfigError("dataset rows (" + std::to_string(data.input_width) + " wide, " +
                      std::to_string(data.label_count) +
                      " labels) do not fit the model; adjust model.input_dim/output_dim/"
                      "context_window");
  }
}

}  // namespace

PhaseTimings& PhaseTimings::operator+=(const PhaseTimings& other) {
  selection += other.selection;
  training += other.training;
  aggregation += other.aggregation;
  bookkeeping += other.bookkeeping;
  evaluation += other.evaluation;
  return *this;
}

PhaseTimings RunRecord::total_timings() const {
  PhaseTimings total;
  for (const RoundRecord& r : rounds) total += r.timings;
  return total;
}

RunRecord RunExperiment(const ExperimentConfig& config) {
  config.Validate();
  const StreamFactory streams(config.master_seed);
  const int k_total = config.scenario.num_agents;

  RunRecord record;
  record.run_id = RunId(config);
  record.config = config;

  int round = 0;
  std::string phase = "setup";
  try {
    ScenarioData data = BuildScenario(config.scenario, streams);
    CheckDataMatchesModel(config, data);
    for (const Dataset& shard : data.shards) record.shard_sizes.push_back(shard.size());
    auto eval = std::make_shared<const Dataset>(std::move(data.eval));
    record.eval = eval;

    RngStream init_stream = streams.Derive("init");
    ParamSet server = InitParams(config.model, init_stream);
    record.initial_eval = Evaluate(config.model, server, *eval, 0);

    auto trace = std::make_shared<RunTrace>(RunTrace{config.model, config.aggregation,
                                                     config.aggregator, config.weighted_fedavg,
                                                     {}, config.master_seed, k_total, {}});
    for (int k = 0; k < k_total; ++k) {
      trace->shard_sizes[k] = static_cast<double>(record.shard_sizes[static_cast<std::size_t>(k)]);
    }

    std::unique_ptr<RecordWriter> writer;
    if (!config.output_dir.empty()) {
      writer = std::make_unique<RecordWriter>(config.output_dir, record);
    }

    ImpactLedger ledger(k_total);
    const ImpactOptions impact_options{config.gamma, config.share_dp_noise};
    std::vector<double> contribution(static_cast<std::size_t>(k_total),
                                     1.0 / static_cast<double>(k_total));

    for (round = 1; round <= config.rounds; ++round) {
      RoundRecord row;
      row.round = round;

      phase = "selection";
      auto start = Clock::now();
      RngStream select_stream = streams.Derive("select", round);
      row.selected = SelectAgents(config.selection(), select_stream);
      row.timings.selection = Seconds(start);

      phase = "training";
      start = Clock::now();
      ClientParams clients =
          TrainSelected(config, server, data.shards, row.selected, streams, round);
      row.timings.training = Seconds(start);

      phase = "aggregation";
      start = Clock::now();
      row.attention = ComputeAttention(server, clients, config.aggregation.norm_order,
                                       config.aggregation.negate_scores);
      std::optional<ParamSet> next;
      if (config.aggregator == Aggregator::kAttention) {
        next.emplace(AttentionAggregate(server, clients, row.attention, config.aggregation,
                                        streams, round));
      } else if (config.weighted_fedavg) {
        next.emplace(WeightedFedAvgAggregate(clients, trace->shard_sizes));
      } else {
        next.emplace(FedAvgAggregate(clients));
      }
      row.timings.aggregation = Seconds(start);

      phase = "bookkeeping";
      start = Clock::now();
      row.measured = round % config.contribution_every_n_rounds == 0;
      if (row.measured) {
        ledger = UpdateImpact(server, *next, clients, row.attention, config.aggregation,
                              impact_options, ledger, row.selected, streams, round);
        contribution = Contributions(ledger, round);
      } else {
        ledger = CarryOver(ledger, round);
      }
      row.impact = ledger.row(round).impact;
      row.round_term = ledger.row(round).round_term;
      row.contribution = contribution;
      row.timings.bookkeeping = Seconds(start);

      phase = "evaluation";
      start = Clock::now();
      row.eval = Evaluate(config.model, *next, *eval, round);
      row.timings.evaluation = Seconds(start);

      phase = "persistence";
      RoundTrace round_trace{round, server, std::move(clients), row.attention};
      if (writer) writer->AppendRound(row, round_trace);
      trace->rounds.push_back(std::move(round_trace));
      record.rounds.push_back(std::move(row));
      server = std::move(*next);
    }
    record.trace = trace;
    if (writer) writer->Finish(record);
  } catch (const RunAbortedError&) {
    throw;
  } catch (const Error& e) {
    throw RunAbortedError(e.kind(), round, phase, e.what());
  }
  return record;
}

ShapleyResult RunShapley(RunRecord& record, ShapleyMode mode, std::uint64_t seed, int workers) {
  if (!record.trace || record.trace->rounds.empty()) {
    throw StructuralError("run_shapley: record has no trace");
  }
  if (mode.kind == ShapleyMode::Kind::kOff) throw ConfigError("run_shapley: mode is off");
  const int n = record.trace->num_agents;
  if (mode.kind == ShapleyMode::Kind::kExact && n > kExactShapleyCap) {
    throw BudgetError("exact Shapley over " + std::to_string(n) + " agents exceeds the cap of " +
                      std::to_string(kExactShapleyCap) + "; use mc(M)");
  }
  if (!record.eval) {
    ScenarioData data = BuildScenario(record.config.scenario, StreamFactory(record.config.master_seed));
    record.eval = std::make_shared<const Dataset>(std::move(data.eval));
  }
  const auto start = Clock::now();
  CharacteristicFn chi = MakeFederatedCharacteristic(record.trace, record.eval);
  ShapleyResult result;
  result.mode = mode;
  result.seed = seed;
  if (mode.kind == ShapleyMode::Kind::kExact) {
    result.raw = ShapleyExact(chi, kExactShapleyCap, workers);
  } else {
    RngStream stream = StreamFactory(seed).Derive("shapley");
    result.raw = ShapleyMonteCarlo(chi, mode.iterations, stream, workers);
  }
  result.normalized = MinMaxSoftmax(result.raw);
  result.evaluations = chi.evaluations();
  result.seconds = Seconds(start);
  record.shapley = result;
  if (!record.config.output_dir.empty()) {
    PersistShapley(record.config.output_dir, record, result);
  }
  return result;
}

}  // namespace fedsim
