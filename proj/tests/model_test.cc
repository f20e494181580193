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
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fedsim/errors.h"
#include "fedsim/model.h"
#include "test_support.h"

namespace fedsim {
namespace {

using testing::FiniteDifference;
using testing::RandomClassification;
using testing::RandomNextToken;

ModelSpec Classifier(int in, std::vector<int> hidden, int out) {
  return ModelSpec{TaskKind::kClassification, in, std::move(hidden), out, 1};
}

ModelSpec NextToken(int embed, std::vector<int> hidden, int vocab, int window) {
  return ModelSpec{TaskKind::kNextToken, embed, std::move(hidden), vocab, window};
}

Dataset Duplicate(const Dataset& d) {
  Dataset out = d;
  for (std::size_t r = 0; r < d.size(); ++r) out.Append(d, r);
  return out;
}

TEST(InitParamsTest, LinearClassifierLayout) {
  RngStream s(1);
  const ParamSet p = InitParams(Classifier(4, {}, 3), s);
  ASSERT_EQ(p.layer_count(), 2u);
  EXPECT_EQ(p.layer(0).id, "dense0.weight");
  EXPECT_EQ(p.layer(0).shape, (std::vector<std::size_t>{4, 3}));
  EXPECT_EQ(p.layer(1).id, "dense0.bias");
  EXPECT_EQ(p.layer(1).shape, (std::vector<std::size_t>{3}));
  for (double b : p.layer(1).values) EXPECT_EQ(b, 0.0);
}

TEST(InitParamsTest, NextTokenLayoutStartsWithEmbedding) {
  RngStream s(1);
  const ParamSet p = InitParams(NextToken(5, {7}, 11, 3), s);
  ASSERT_EQ(p.layer_count(), 5u);
  EXPECT_EQ(p.layer(0).id, "embedding");
  EXPECT_EQ(p.layer(0).shape, (std::vector<std::size_t>{11, 5}));
  EXPECT_EQ(p.layer(1).shape, (std::vector<std::size_t>{15, 7}));
  EXPECT_EQ(p.layer(3).shape, (std::vector<std::size_t>{7, 11}));
}

TEST(InitParamsTest, DeterministicUnderSeed) {
  const ModelSpec spec = Classifier(6, {5, 4}, 3);
  RngStream a(9), b(9);
  EXPECT_EQ(InitParams(spec, a), InitParams(spec, b));
}

TEST(InitParamsTest, WeightScaleFollowsFanIn) {
  RngStream s(5);
  const ParamSet p = InitParams(Classifier(100, {}, 100), s);
  const auto& w = p.layer(0).values;
  ASSERT_EQ(w.size(), 10000u);
  double sq = 0.0;
  for (double x : w) sq += x * x;
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(w.size())), 0.1, 0.01);
}

TEST(ModelSpecTest, ValidationAndLayout) {
  EXPECT_THROW(Classifier(0, {}, 3).Validate(), ConfigError);
  EXPECT_THROW(Classifier(3, {}, 1).Validate(), ConfigError);
  EXPECT_THROW(Classifier(3, {0}, 3).Validate(), ConfigError);
  EXPECT_THROW(NextToken(3, {}, 5, 0).Validate(), ConfigError);
  RngStream s(1);
  const ParamSet p = InitParams(Classifier(4, {}, 3), s);
  EXPECT_THROW(RequireLayout(Classifier(4, {2}, 3), p), StructuralError);
}

TEST(LossTest, UniformLogitsGiveLogClassCount) {
  const ModelSpec spec = Classifier(4, {6}, 10);
  RngStream s(1);
  const ParamSet zero = ZerosLike(InitParams(spec, s));
  const Dataset d = RandomClassification(37, 4, 10, 2);
  EXPECT_NEAR(MeanLoss(spec, zero, d), std::log(10.0), 1e-15);
  EXPECT_NEAR(LossAndGrad(spec, zero, d).loss, 2.302585092994046, 1e-15);
}

TEST(LossTest, DuplicatedBatchKeepsMeanLossAndGradient) {
  const ModelSpec spec = Classifier(5, {4}, 3);
  RngStream s(3);
  const ParamSet p = InitParams(spec, s);
  const Dataset d = RandomClassification(20, 5, 3, 4);
  const auto once = LossAndGrad(spec, p, d);
  const auto twice = LossAndGrad(spec, p, Duplicate(d));
  EXPECT_NEAR(once.loss, twice.loss, 1e-14);
  EXPECT_LE(testing::MaxRelDiff(once.grad, twice.grad, 1e-15), 1e-12);
}

TEST(LossTest, BadIdsAreDataErrors) {
  const ModelSpec spec = NextToken(3, {4}, 6, 2);
  RngStream s(1);
  const ParamSet p = InitParams(spec, s);
  Dataset d = RandomNextToken(4, 2, 6, 1);
  d.contexts[0] = 6;
  EXPECT_THROW(LossAndGrad(spec, p, d), DataError);
  d.contexts[0] = 0;
  d.targets[1] = -1;
  EXPECT_THROW(MeanLoss(spec, p, d), DataError);
  EXPECT_THROW(LossAndGrad(spec, p, RandomClassification(3, 2, 6, 1)), DataError);
}

// Analytic gradient against central differences on randomly chosen
// coordinates.
double WorstGradientError(const ModelSpec& spec, const Dataset& batch, std::uint64_t seed,
                          int coords) {
  RngStream init(seed);
  const ParamSet p = InitParams(spec, init);
  const ParamSet grad = LossAndGrad(spec, p, batch).grad;
  std::mt19937_64 pick(seed * 31 + 7);
  std::uniform_int_distribution<std::size_t> flat(0, p.parameter_count() - 1);
  double worst = 0.0;
  for (int i = 0; i < coords; ++i) {
    std::size_t index = flat(pick);
    std::size_t layer = 0;
    while (index >= p.layer(layer).size()) index -= p.layer(layer++).size();
    const double fd = FiniteDifference(spec, p, batch, layer, index);
    worst = std::max(worst, testing::RelDiff(grad.layer(layer).values[index], fd, 1e-6));
  }
  return worst;
}

TEST(GradientTest, ClassifierMatchesFiniteDifferences) {
  const ModelSpec spec = Classifier(6, {8, 5}, 4);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    EXPECT_LE(WorstGradientError(spec, RandomClassification(16, 6, 4, seed), seed, 20), 1e-5)
        << "seed " << seed;
  }
}

TEST(GradientTest, NextTokenMatchesFiniteDifferences) {
  const ModelSpec spec = NextToken(4, {6}, 9, 3);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    EXPECT_LE(WorstGradientError(spec, RandomNextToken(16, 3, 9, seed), seed, 20), 1e-5)
        << "seed " << seed;
  }
}

TEST(PredictTest, ZeroParamsGiveUniformRows) {
  const ModelSpec spec = NextToken(3, {4}, 7, 2);
  RngStream s(1);
  const Matrix m = PredictDistribution(spec, ZerosLike(InitParams(spec, s)),
                                       RandomNextToken(5, 2, 7, 3));
  ASSERT_EQ(m.rows, 5u);
  for (double v : m.values) EXPECT_DOUBLE_EQ(v, 1.0 / 7.0);
}

TEST(PredictTest, RowsAreProbabilityVectors) {
  const ModelSpec spec = Classifier(5, {6}, 4);
  RngStream s(8);
  const ParamSet p = InitParams(spec, s);
  const Matrix m = PredictDistribution(spec, p, RandomClassification(50, 5, 4, 9));
  for (std::size_t r = 0; r < m.rows; ++r) {
    double total = 0.0;
    for (double v : m.row(r)) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(PredictTest, SaturatedLogit) {
  const ModelSpec spec = Classifier(2, {}, 3);
  const ParamSet p({Layer{"dense0.weight", {2, 3}, std::vector<double>(6, 0.0)},
                    Layer{"dense0.bias", {3}, {0.0, 20.0, 0.0}}});
  const Matrix m = PredictDistribution(spec, p, RandomClassification(1, 2, 3, 1));
  EXPECT_GT(m.row(0)[1], 0.9999);
}

TEST(SgdTest, LossHalvesOnSeparableToySet) {
  const ModelSpec spec = Classifier(2, {8}, 2);
  Dataset d;
  d.task = TaskKind::kClassification;
  d.width = 2;
  std::mt19937_64 gen(4);
  std::normal_distribution<double> noise(0.0, 0.3);
  for (int i = 0; i < 64; ++i) {
    const int label = i % 2;
    const double centre = label == 0 ? -1.5 : 1.5;
    d.features.push_back(centre + noise(gen));
    d.features.push_back(centre + noise(gen));
    d.targets.push_back(label);
  }
  RngStream s(2);
  ParamSet p = InitParams(spec, s);
  const double initial = MeanLoss(spec, p, d);
  for (int step = 0; step < 50; ++step) {
    const auto lg = LossAndGrad(spec, p, d);
    const std::vector<ScaledDelta> t{{-0.2, lg.grad}};
    p = AxpyCombine(p, t);
  }
  EXPECT_LT(MeanLoss(spec, p, d), 0.5 * initial);
}

}  // namespace
}  // namespace fedsim
