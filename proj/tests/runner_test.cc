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


#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "fedsim/contribution.h"
#include "fedsim/errors.h"
#include "fedsim/record_io.h"
#include "fedsim/replay.h"
#include "fedsim/runner.h"
#include "test_support.h"

namespace fedsim {
namespace {

using testing::SmallConfig;

void ExpectSameRound(const RoundRecord& a, const RoundRecord& b) {
  EXPECT_EQ(a.round, b.round);
  EXPECT_EQ(a.selected, b.selected);
  EXPECT_EQ(a.attention, b.attention);
  EXPECT_EQ(a.impact, b.impact);
  EXPECT_EQ(a.round_term, b.round_term);
  EXPECT_EQ(a.contribution, b.contribution);
  EXPECT_EQ(a.measured, b.measured);
  EXPECT_EQ(a.eval, b.eval);
}

TEST(RunExperimentTest, ZeroSignalRoundGivesUniformContributions) {
  ExperimentConfig c = SmallConfig("normal", 1);
  c.trainer.learning_rate = 0.0;
  c.aggregation.dp_weight = 0.0;
  const RunRecord r = RunExperiment(c);
  ASSERT_EQ(r.rounds.size(), 1u);
  const auto& trace = r.trace->rounds[0];
  for (const auto& [agent, upload] : trace.clients) EXPECT_EQ(upload, trace.server_before);
  for (double v : r.final_round().contribution) EXPECT_DOUBLE_EQ(v, 0.1);
}

TEST(RunExperimentTest, RecordShapeAndSimplices) {
  const RunRecord r = RunExperiment(SmallConfig("noise-last2", 3));
  ASSERT_EQ(r.rounds.size(), 3u);
  EXPECT_EQ(r.shard_sizes, std::vector<std::size_t>(10, 100));
  EXPECT_EQ(r.initial_eval.round, 0);
  for (const auto& round : r.rounds) {
    EXPECT_EQ(round.selected.size(), 10u);
    EXPECT_EQ(round.contribution.size(), 10u);
    EXPECT_EQ(round.eval.kind, MetricKind::kAccuracy);
    double total = 0.0;
    for (double v : round.contribution) total += v;
    EXPECT_NEAR(total, 1.0, 1e-9);
    for (std::size_t l = 0; l < round.attention.layer_count(); ++l) {
      double col = 0.0;
      for (std::size_t k = 0; k < round.attention.agent_count(); ++k) {
        col += round.attention.at(k, l);
      }
      EXPECT_NEAR(col, 1.0, 1e-9);
    }
    EXPECT_GT(round.timings.training, 0.0);
  }
}

TEST(RunExperimentTest, DeterministicAcrossWorkerCounts) {
  for (const char* preset : {"mislabel-last2", "shuffle-last4"}) {
    ExperimentConfig c = SmallConfig(preset, 2);
    const RunRecord a = RunExperiment(c);
    c.workers = 3;
    const RunRecord b = RunExperiment(c);
    ASSERT_EQ(a.rounds.size(), b.rounds.size());
    for (std::size_t t = 0; t < a.rounds.size(); ++t) ExpectSameRound(a.rounds[t], b.rounds[t]);
    EXPECT_EQ(ContributionsCsv(a), ContributionsCsv(b));
    EXPECT_EQ(a.run_id, b.run_id);
  }
}

TEST(RunExperimentTest, TruncationConsistency) {
  ExperimentConfig c = SmallConfig("normal", 3);
  c.selection_fraction = 0.5;
  const RunRecord shortrun = RunExperiment(c);
  c.rounds = 8;
  const RunRecord longrun = RunExperiment(c);
  for (std::size_t t = 0; t < 3; ++t) ExpectSameRound(shortrun.rounds[t], longrun.rounds[t]);
}

TEST(RunExperimentTest, PartialSelectionCarriesImpactOver) {
  ExperimentConfig c = SmallConfig("normal", 6);
  c.selection_fraction = 0.3;
  const RunRecord r = RunExperiment(c);
  std::vector<double> previous(10, 0.0);
  for (const auto& round : r.rounds) {
    EXPECT_EQ(round.selected.size(), 3u);
    for (AgentId k = 0; k < 10; ++k) {
      const bool picked = std::binary_search(round.selected.begin(), round.selected.end(), k);
      if (!picked) {
        EXPECT_EQ(round.impact[k], previous[k]);
        EXPECT_EQ(round.round_term[k], 0.0);
      }
    }
    previous = round.impact;
  }
}

TEST(RunExperimentTest, MeasurementCadence) {
  ExperimentConfig c = SmallConfig("normal", 5);
  c.contribution_every_n_rounds = 2;
  const RunRecord r = RunExperiment(c);
  for (const auto& round : r.rounds) {
    EXPECT_EQ(round.measured, round.round % 2 == 0) << round.round;
  }
  EXPECT_EQ(r.rounds[0].contribution, std::vector<double>(10, 0.1));
  EXPECT_EQ(r.rounds[2].contribution, r.rounds[1].contribution);
  EXPECT_EQ(r.rounds[2].impact, r.rounds[1].impact);
  EXPECT_NE(r.rounds[3].impact, r.rounds[2].impact);
}

TEST(RunExperimentTest, FedAvgBaselines) {
  for (bool weighted : {false, true}) {
    ExperimentConfig c = SmallConfig("reduce-graded", 2);
    c.aggregator = Aggregator::kFedAvg;
    c.weighted_fedavg = weighted;
    const RunRecord r = RunExperiment(c);
    const auto& t = r.trace->rounds[1];
    const ParamSet expected = weighted ? WeightedFedAvgAggregate(r.trace->rounds[0].clients,
                                                                 r.trace->shard_sizes)
                                       : FedAvgAggregate(r.trace->rounds[0].clients);
    EXPECT_EQ(t.server_before, expected);
    EXPECT_EQ(r.final_round().contribution.size(), 20u);
  }
}

TEST(RunExperimentTest, ModuleErrorsAbortWithRoundAndPhase) {
  testing::ScratchDir dir("abort");
  ExperimentConfig c = SmallConfig("normal", 3);
  // Uploads stay finite (about 1e300); the server step overflows.
  c.trainer.learning_rate = 1e300;
  c.output_dir = dir.path().string();
  try {
    RunExperiment(c);
    FAIL() << "expected RunAbortedError";
  } catch (const RunAbortedError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
    EXPECT_EQ(e.round(), 1);
    EXPECT_EQ(e.phase(), "aggregation");
    EXPECT_NE(std::string(e.what()).find("round 1"), std::string::npos);
  }
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "record.jsonl"));
}

TEST(ReplayTest, FullCoalitionReproducesTheRun) {
  const RunRecord r = RunExperiment(SmallConfig("noise-last2", 3));
  const auto chi = MakeFederatedCharacteristic(r.trace, r.eval);
  const Coalition all = (Coalition{1} << 10) - 1;
  EXPECT_EQ(chi(all), r.final_round().eval.value);
  EXPECT_EQ(chi(0), r.initial_eval.value);
  EXPECT_NEAR(chi(0), 0.1, 0.06);
  EXPECT_THROW(ReplayCoalition(RunTrace{}, all), StructuralError);
}

TEST(ReplayTest, BiggerCoalitionsDoBetterOnCleanData) {
  const RunRecord r = RunExperiment(SmallConfig("normal", 4));
  const auto chi = MakeFederatedCharacteristic(r.trace, r.eval);
  std::mt19937_64 gen(3);
  auto median_of_size = [&](int size) {
    std::vector<double> values;
    for (int i = 0; i < 15; ++i) {
      std::vector<int> ids(10);
      std::iota(ids.begin(), ids.end(), 0);
      std::shuffle(ids.begin(), ids.end(), gen);
      Coalition q = 0;
      for (int j = 0; j < size; ++j) q |= Coalition{1} << ids[j];
      values.push_back(chi(q));
    }
    std::nth_element(values.begin(), values.begin() + 7, values.end());
    return values[7];
  };
  EXPECT_GE(median_of_size(8), median_of_size(2));
}

TEST(RunShapleyTest, SmallRecordExactVersusMonteCarlo) {
  ExperimentConfig c = SmallConfig("normal", 3);
  c.scenario.num_agents = 3;
  c.scenario.corruptions.clear();
  RunRecord r = RunExperiment(c);
  const auto exact = RunShapley(r, ShapleyMode::Parse("exact"), 1);
  EXPECT_LE(exact.evaluations, 8u);
  const auto mc = RunShapley(r, ShapleyMode::Parse("mc(2000)"), 1);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(mc.raw[i], exact.raw[i], 0.02);
  ASSERT_TRUE(r.shapley.has_value());
  EXPECT_EQ(r.shapley->mode, ShapleyMode::Parse("mc(2000)"));
  EXPECT_EQ(mc.normalized, MinMaxSoftmax(mc.raw));
}

TEST(RunShapleyTest, ExactRefusesLargeFederations) {
  RunRecord r = RunExperiment(SmallConfig("reduce-graded", 1));
  EXPECT_THROW(RunShapley(r, ShapleyMode::Parse("exact"), 1), BudgetError);
}

TEST(RunShapleyTest, NoiseAgentsRankLast) {
  ExperimentConfig c = DefaultConfig("noise-last2");
  RunRecord r = RunExperiment(c);
  const auto s = RunShapley(r, ShapleyMode::Parse("mc(500)"), 7, 2);
  std::vector<int> order(10);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return s.normalized[a] < s.normalized[b]; });
  EXPECT_EQ((std::set<int>{order[0], order[1]}), (std::set<int>{8, 9}));
}

}  // namespace
}  // namespace fedsim
