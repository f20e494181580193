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
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "fedsim/errors.h"
#include "fedsim/trainer.h"
#include "test_support.h"

namespace fedsim {
namespace {

using testing::RandomClassification;

const ModelSpec kSpec{TaskKind::kClassification, 4, {5}, 3, 1};

ParamSet Init(std::uint64_t seed) {
  RngStream s(seed);
  return InitParams(kSpec, s);
}

TEST(ClientUpdateTest, ZeroStepSizeReturnsGlobal) {
  const ParamSet w = Init(1);
  RngStream s(2);
  EXPECT_EQ(ClientUpdate(kSpec, w, RandomClassification(30, 4, 3, 3), {2, 8, 0.0}, s), w);
}

TEST(ClientUpdateTest, SingleBatchIsOneGradientStep) {
  const ParamSet w = Init(1);
  const Dataset shard = RandomClassification(10, 4, 3, 5);
  RngStream s(2);
  const ParamSet out = ClientUpdate(kSpec, w, shard, {1, 64, 0.1}, s);

  const auto lg = LossAndGrad(kSpec, w, shard);
  // The shuffled batch holds the same rows, so only summation order differs.
  const std::vector<ScaledDelta> step{{-0.1, lg.grad}};
  const ParamSet expected = AxpyCombine(w, step);
  EXPECT_LE(testing::MaxRelDiff(out, expected, 1e-12), 1e-12);
}

TEST(ClientUpdateTest, LastPartialBatchIsKept) {
  const ParamSet w = Init(3);
  const Dataset shard = RandomClassification(5, 4, 3, 6);
  RngStream s(9), replay(9);
  const ParamSet out = ClientUpdate(kSpec, w, shard, {1, 4, 0.3}, s);

  std::vector<std::size_t> order(5);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), replay);
  ParamSet expected = w;
  for (auto [begin, len] : {std::pair<std::size_t, std::size_t>{0, 4}, {4, 1}}) {
    const Dataset b = shard.Subset(std::span(order).subspan(begin, len));
    const ParamSet grad = LossAndGrad(kSpec, expected, b).grad;
    const std::vector<ScaledDelta> step{{-0.3, grad}};
    expected = AxpyCombine(expected, step);
  }
  EXPECT_EQ(out, expected);
}

TEST(ClientUpdateTest, DeterministicUnderStream) {
  const ParamSet w = Init(1);
  const Dataset shard = RandomClassification(50, 4, 3, 3);
  RngStream a(77), b(77);
  EXPECT_EQ(ClientUpdate(kSpec, w, shard, {3, 7, 0.05}, a),
            ClientUpdate(kSpec, w, shard, {3, 7, 0.05}, b));
}

TEST(ClientUpdateTest, DoesNotTouchInputs) {
  const ParamSet w = Init(4);
  const Dataset shard = RandomClassification(40, 4, 3, 8);
  const auto w_hash = Fingerprint(w);
  const auto d_hash = Fingerprint(shard);
  RngStream s(1);
  (void)ClientUpdate(kSpec, w, shard, {2, 8, 0.5}, s);
  EXPECT_EQ(Fingerprint(w), w_hash);
  EXPECT_EQ(Fingerprint(shard), d_hash);
}

TEST(ClientUpdateTest, SmallStepsDoNotRaiseTrainingLoss) {
  int improved = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    const auto seed = static_cast<std::uint64_t>(t);
    const ParamSet w = Init(seed);
    const Dataset shard = RandomClassification(64, 4, 3, 1000 + seed);
    RngStream s(seed);
    const ParamSet out = ClientUpdate(kSpec, w, shard, {1, 16, 0.01}, s);
    if (MeanLoss(kSpec, out, shard) <= MeanLoss(kSpec, w, shard)) ++improved;
  }
  EXPECT_GE(improved, 38);
}

TEST(ClientUpdateTest, EmptyShardAndBadConfig) {
  const ParamSet w = Init(1);
  Dataset empty;
  empty.width = 4;
  RngStream s(1);
  EXPECT_THROW(ClientUpdate(kSpec, w, empty, {}, s), ScenarioError);
  EXPECT_THROW((TrainerConfig{0, 8, 0.1}.Validate()), ConfigError);
  EXPECT_THROW((TrainerConfig{1, 0, 0.1}.Validate()), ConfigError);
  EXPECT_THROW((TrainerConfig{1, 8, -0.1}.Validate()), ConfigError);
}

}  // namespace
}  // namespace fedsim
