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


#include <memory>
#include <vector>

#include <benchmark/benchmark.h>

#include "fedsim/aggregation.h"
#include "fedsim/config.h"
#include "fedsim/contribution.h"
#include "fedsim/replay.h"
#include "fedsim/runner.h"
#include "fedsim/scenario.h"
#include "fedsim/shapley.h"
#include "fedsim/trainer.h"

namespace fedsim {
namespace {

// One finished run shared by the server-side benchmarks.
const RunRecord& Recorded() {
  static const RunRecord record = RunExperiment(DefaultConfig("noise-last2"));
  return record;
}

void BM_ClientUpdate(benchmark::State& state) {
  const ExperimentConfig c = DefaultConfig(state.range(0) == 0 ? "normal" : "normal-text");
  const ScenarioData data = BuildScenario(c.scenario, StreamFactory(1));
  const StreamFactory streams(1);
  RngStream init = streams.Derive("init");
  const ParamSet w = InitParams(c.model, init);
  for (auto _ : state) {
    RngStream s = streams.Derive("train", 1, 0);
    benchmark::DoNotOptimize(ClientUpdate(c.model, w, data.shards[0], c.trainer, s));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(data.shards[0].size()));
}
BENCHMARK(BM_ClientUpdate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Attention(benchmark::State& state) {
  const RoundTrace& t = Recorded().trace->rounds.back();
  for (auto _ : state) benchmark::DoNotOptimize(ComputeAttention(t.server_before, t.clients, 2.0));
}
BENCHMARK(BM_Attention)->Unit(benchmark::kMicrosecond);

void BM_AttentionAggregate(benchmark::State& state) {
  const RoundTrace& t = Recorded().trace->rounds.back();
  const AggregationConfig cfg;
  const StreamFactory streams(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        AttentionAggregate(t.server_before, t.clients, t.attention, cfg, streams, t.round));
  }
}
BENCHMARK(BM_AttentionAggregate)->Unit(benchmark::kMicrosecond);

// The per-round contribution bookkeeping: impact update plus normalization.
void BM_RoundBookkeeping(benchmark::State& state) {
  const RunTrace& trace = *Recorded().trace;
  const RoundTrace& t = trace.rounds.front();
  const ParamSet& after = trace.rounds[1].server_before;
  std::vector<AgentId> selected;
  for (const auto& entry : t.clients) selected.push_back(entry.first);
  const ImpactLedger ledger(trace.num_agents);
  const StreamFactory streams(1);
  for (auto _ : state) {
    const ImpactLedger next = UpdateImpact(t.server_before, after, t.clients, t.attention,
                                           trace.aggregation, {}, ledger, selected, streams, 1);
    benchmark::DoNotOptimize(Contributions(next, 1));
  }
}
BENCHMARK(BM_RoundBookkeeping)->Unit(benchmark::kMicrosecond);

// One coalition replay plus held-out evaluation: the unit cost of the
// Shapley path.
void BM_CoalitionUtility(benchmark::State& state) {
  const RunRecord& r = Recorded();
  const Coalition q = 0b0101010101;
  for (auto _ : state) {
    benchmark::DoNotOptimize(Utility(r.trace->model, ReplayCoalition(*r.trace, q), *r.eval));
  }
}
BENCHMARK(BM_CoalitionUtility)->Unit(benchmark::kMillisecond);

void BM_ShapleyMonteCarlo(benchmark::State& state) {
  const RunRecord& r = Recorded();
  for (auto _ : state) {
    // Fresh cache each time so every coalition is replayed.
    const CharacteristicFn chi = MakeFederatedCharacteristic(r.trace, r.eval);
    RngStream s(1);
    benchmark::DoNotOptimize(ShapleyMonteCarlo(chi, static_cast<int>(state.range(0)), s));
  }
}
BENCHMARK(BM_ShapleyMonteCarlo)->Arg(50)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace
}  // namespace fedsim

BENCHMARK_MAIN();
