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


#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "fedsim/aggregation.h"
#include "fedsim/errors.h"
#include "test_support.h"

namespace fedsim {
namespace {

using testing::MaxRelDiff;
using testing::RandomCongruentCollection;
using testing::Vec;

TEST(SelectAgentsTest, CountsFollowTheCeilingRule) {
  RngStream s(1);
  EXPECT_EQ(SelectAgents({1.0, 10}, s), (std::vector<AgentId>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
  EXPECT_EQ(SelectAgents({0.1, 10}, s).size(), 1u);
  EXPECT_EQ(SelectAgents({0.25, 10}, s).size(), 3u);
  EXPECT_EQ((SelectionPolicy{0.3, 10}.SelectedCount()), 3);
  EXPECT_EQ((SelectionPolicy{0.01, 10}.SelectedCount()), 1);
}

TEST(SelectAgentsTest, DistinctSortedAndSeeded) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream a(seed), b(seed);
    const auto picked = SelectAgents({0.4, 20}, a);
    EXPECT_EQ(picked, SelectAgents({0.4, 20}, b));
    EXPECT_EQ(picked.size(), 8u);
    EXPECT_TRUE(std::is_sorted(picked.begin(), picked.end()));
    EXPECT_EQ(std::set<AgentId>(picked.begin(), picked.end()).size(), picked.size());
    for (AgentId k : picked) EXPECT_TRUE(k >= 0 && k < 20);
  }
}

TEST(SelectAgentsTest, RejectsBadFraction) {
  RngStream s(1);
  EXPECT_THROW(SelectAgents({0.0, 10}, s), ConfigError);
  EXPECT_THROW(SelectAgents({1.5, 10}, s), ConfigError);
  EXPECT_THROW(SelectAgents({0.5, 0}, s), ConfigError);
}

TEST(ComputeAttentionTest, IdenticalClientsGetUniformWeights) {
  const auto c = RandomCongruentCollection(1, 3);
  ClientParams same;
  for (int k = 0; k < 4; ++k) same.emplace(k, c.clients.at(0));
  const auto a = ComputeAttention(c.server, same, 2.0);
  for (double v : a.values()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(ComputeAttentionTest, HandEvaluatedSoftmax) {
  const ClientParams clients{{0, Vec({0.0})}, {1, Vec({0.0})}, {2, Vec({std::log(2.0)})}};
  const auto a = ComputeAttention(Vec({0.0}), clients, 2.0);
  EXPECT_NEAR(a.alpha(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(a.alpha(1, 0), 0.25, 1e-15);
  EXPECT_NEAR(a.alpha(2, 0), 0.5, 1e-15);
}

TEST(ComputeAttentionTest, SingleClientGetsEverything) {
  const auto c = RandomCongruentCollection(1, 5);
  const auto a = ComputeAttention(c.server, c.clients, 2.0);
  for (double v : a.values()) EXPECT_EQ(v, 1.0);
}

TEST(ComputeAttentionTest, ColumnsAreSimplexAndOrderedByDistance) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto c = RandomCongruentCollection(5, seed);
    for (bool negate : {false, true}) {
      const auto a = ComputeAttention(c.server, c.clients, 2.0, negate);
      for (std::size_t l = 0; l < a.layer_count(); ++l) {
        double total = 0.0;
        for (std::size_t i = 0; i < a.agent_count(); ++i) {
          EXPECT_GT(a.at(i, l), 0.0);
          total += a.at(i, l);
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
        for (std::size_t i = 0; i < a.agent_count(); ++i) {
          for (std::size_t j = 0; j < a.agent_count(); ++j) {
            const double si = LayerNormDiff(c.server, c.clients.at(a.agents()[i]), 2.0)[l];
            const double sj = LayerNormDiff(c.server, c.clients.at(a.agents()[j]), 2.0)[l];
            if (si > sj) {
              if (negate) {
                EXPECT_LT(a.at(i, l), a.at(j, l));
              } else {
                EXPECT_GT(a.at(i, l), a.at(j, l));
              }
            }
          }
        }
      }
    }
  }
}

TEST(ComputeAttentionTest, NonCongruentClientIsStructuralError) {
  const ClientParams clients{{0, Vec({1.0})}, {1, Vec({1.0, 2.0})}};
  EXPECT_THROW(ComputeAttention(Vec({0.0}), clients, 2.0), StructuralError);
}

TEST(AttentionMatrixTest, LookupByAgent) {
  const AttentionMatrix a({3, 7}, {"w"}, {0.4, 0.6});
  EXPECT_EQ(a.IndexOf(7), 1u);
  EXPECT_FALSE(a.IndexOf(5).has_value());
  EXPECT_EQ(a.alpha(3, 0), 0.4);
  EXPECT_THROW(a.alpha(5, 0), StructuralError);
  EXPECT_THROW(AttentionMatrix({1}, {"w"}, {0.5, 0.5}), StructuralError);
}

TEST(AttentionAggregateTest, ClientsEqualToServerLeaveItUnchanged) {
  const auto c = RandomCongruentCollection(1, 8);
  ClientParams clients{{0, c.server}, {1, c.server}, {2, c.server}};
  const auto a = ComputeAttention(c.server, clients, 2.0);
  AggregationConfig cfg;
  cfg.dp_weight = 0.0;
  EXPECT_EQ(AttentionAggregate(c.server, clients, a, cfg, StreamFactory(1), 1), c.server);
}

TEST(AttentionAggregateTest, HandEvaluatedTwoClientStep) {
  const ClientParams clients{{0, Vec({2.0})}, {1, Vec({4.0})}};
  const AttentionMatrix a({0, 1}, {"w"}, {0.5, 0.5});
  AggregationConfig cfg;
  cfg.stepsize = 1.0;
  cfg.dp_weight = 0.0;
  EXPECT_EQ(AttentionAggregate(Vec({0.0}), clients, a, cfg, StreamFactory(1), 1), Vec({3.0}));
}

TEST(AttentionAggregateTest, UniformUnitStepEqualsFedAvg) {
  AggregationConfig cfg;
  cfg.stepsize = 1.0;
  cfg.dp_weight = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto c = RandomCongruentCollection(2 + static_cast<int>(seed % 6), 500 + seed);
    const auto out = AttentionAggregate(c.server, c.clients, UniformAttention(c.server, c.clients),
                                        cfg, StreamFactory(seed), 1);
    EXPECT_LE(MaxRelDiff(out, FedAvgAggregate(c.clients), 1e-300), 1e-12) << "seed " << seed;
  }
}

TEST(AttentionAggregateTest, NoiseIsSeededPerRound) {
  const auto c = RandomCongruentCollection(3, 1);
  const auto a = ComputeAttention(c.server, c.clients, 2.0);
  const AggregationConfig cfg;
  const auto r1 = AttentionAggregate(c.server, c.clients, a, cfg, StreamFactory(4), 1);
  EXPECT_EQ(r1, AttentionAggregate(c.server, c.clients, a, cfg, StreamFactory(4), 1));
  EXPECT_NE(r1, AttentionAggregate(c.server, c.clients, a, cfg, StreamFactory(4), 2));
}

TEST(AttentionAggregateTest, DpNoiseIsNeutralInExpectation) {
  const auto c = RandomCongruentCollection(3, 21);
  const auto a = ComputeAttention(c.server, c.clients, 2.0);
  AggregationConfig cfg;  // beta = 0.001, sigma = 1
  AggregationConfig clean = cfg;
  clean.dp_weight = 0.0;
  const ParamSet target = AttentionAggregate(c.server, c.clients, a, clean, StreamFactory(1), 0);

  const int draws = 1000;
  std::vector<std::vector<double>> sum;
  for (const auto& layer : target.layers()) sum.emplace_back(layer.size(), 0.0);
  const StreamFactory streams(99);
  for (int d = 1; d <= draws; ++d) {
    const auto out = AttentionAggregate(c.server, c.clients, a, cfg, streams, d);
    for (std::size_t l = 0; l < sum.size(); ++l) {
      for (std::size_t i = 0; i < sum[l].size(); ++i) sum[l][i] += out.layer(l).values[i];
    }
  }
  for (std::size_t l = 0; l < sum.size(); ++l) {
    double alpha_sq = 0.0;
    for (std::size_t k = 0; k < a.agent_count(); ++k) alpha_sq += a.at(k, l) * a.at(k, l);
    const double se =
        cfg.stepsize * cfg.dp_weight * cfg.dp_sigma * std::sqrt(alpha_sq / draws);
    for (std::size_t i = 0; i < sum[l].size(); ++i) {
      EXPECT_NEAR(sum[l][i] / draws, target.layer(l).values[i], 3.0 * se);
    }
  }
}

TEST(AttentionAggregateTest, MissingAttentionIsStructuralError) {
  const auto c = RandomCongruentCollection(2, 3);
  const AttentionMatrix only_one({0}, {c.server.layer(0).id}, {1.0});
  EXPECT_THROW(AttentionAggregate(c.server, c.clients, only_one, {}, StreamFactory(1), 1),
               StructuralError);
}

TEST(FedAvgTest, Examples) {
  const ParamSet x = Vec({0.1, -3.0});
  EXPECT_EQ(FedAvgAggregate({{4, x}}), x);
  EXPECT_EQ(FedAvgAggregate({{0, Vec({0.0, 0.0})}, {1, Vec({2.0, 4.0})}}), Vec({1.0, 2.0}));
  ClientParams copies;
  for (int k = 0; k < 7; ++k) copies.emplace(k, x);
  EXPECT_LE(MaxRelDiff(FedAvgAggregate(copies), x), 1e-15);
}

TEST(FedAvgTest, WeightedMeanAndErrors) {
  const ClientParams clients{{0, Vec({0.0})}, {1, Vec({4.0})}};
  EXPECT_DOUBLE_EQ(WeightedFedAvgAggregate(clients, {{0, 1.0}, {1, 3.0}}).layer(0).values[0],
                   3.0);
  EXPECT_THROW(WeightedFedAvgAggregate(clients, {{0, 1.0}, {1, 0.0}}), DomainError);
  EXPECT_THROW(WeightedFedAvgAggregate(clients, {{0, 1.0}}), DomainError);
  EXPECT_THROW(FedAvgAggregate({}), StructuralError);
  EXPECT_THROW(FedAvgAggregate({{0, Vec({0.0})}, {1, Vec({0.0}, "v")}}), StructuralError);
}

TEST(AggregationConfigTest, Validation) {
  AggregationConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.stepsize = 0.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = {};
  c.norm_order = 0.5;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = {};
  c.dp_sigma = -1.0;
  EXPECT_THROW(c.Validate(), ConfigError);
}

}  // namespace
}  // namespace fedsim
