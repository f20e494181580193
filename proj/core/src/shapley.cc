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

#include "fedsim/shapley.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>
#include <utility>

#include "fedsim/errors.h"

namespace fedsim {

CharacteristicFn::CharacteristicFn(int num_players, Evaluator evaluator)
    : num_players_(num_players), state_(std::make_shared<State>()) {
  if (num_players < 1 || num_players > kMaxPlayers) {
    throw DomainError("characteristic function supports 1.." + std::to_string(kMaxPlayers) +
                      " players");
  }
  if (!evaluator) throw DomainError("characteristic function needs an evaluator");
  state_->evaluator = std::move(evaluator);
}

double CharacteristicFn::operator()(Coalition coalition) const {
  if (coalition >> num_players_) {
    throw DomainError("coalition references players beyond " + std::to_string(num_players_));
  }
  {
    std::lock_guard lock(state_->mutex);
    auto it = state_->cache.find(coalition);
    if (it != state_->cache.end()) return it->second;
  }
  const double value = state_->evaluator(coalition);
  state_->evaluations.fetch_add(1);
  std::lock_guard lock(state_->mutex);
  return state_->cache.emplace(coalition, value).first->second;
}

void CharacteristicFn::Prefetch(std::span<const Coalition> coalitions, int workers) const {
  workers = std::max(1, workers);
  if (workers == 1 || coalitions.size() < 2) {
    for (Coalition c : coalitions) (*this)(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < coalitions.size(); i = next.fetch_add(1)) {
        (*this)(coalitions[i]);
      }
    });
  }
}

std::vector<double> ShapleyExact(const CharacteristicFn& chi, int cap, int workers) {
  const int n = chi.num_players();
  if (n > cap) {
    throw BudgetError("exact Shapley over " + std::to_string(n) + " agents exceeds the cap of " +
                      std::to_string(cap) + "; use the Monte Carlo estimator");
  }
  const Coalition all = (Coalition{1} << n) - 1;
  std::vector<Coalition> every(static_cast<std::size_t>(all) + 1);
  std::iota(every.begin(), every.end(), Coalition{0});
  chi.Prefetch(every, workers);

  // weight[s] = s! (n - s - 1)! / n!
  std::vector<double> factorial(static_cast<std::size_t>(n) + 1, 1.0);
  for (int s = 1; s <= n; ++s) factorial[s] = factorial[s - 1] * s;
  std::vector<double> weight(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    weight[static_cast<std::size_t>(s)] = factorial[s] * factorial[n - s - 1] / factorial[n];
  }
  std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const Coalition bit = Coalition{1} << i;
    double sum = 0.0;
    for (Coalition q = 0; q <= all; ++q) {
      if (q & bit) continue;
      sum += weight[static_cast<std::size_t>(std::popcount(q))] * (chi(q | bit) - chi(q));
    }
    phi[static_cast<std::size_t>(i)] = sum;
  }
  return phi;
}

std::vector<double> ShapleyMonteCarlo(const CharacteristicFn& chi, int iterations,
                                      RngStream& stream, int workers) {
  if (iterations < 1) throw DomainError("Monte Carlo Shapley needs at least one iteration");
  const auto n = static_cast<std::size_t>(chi.num_players());
  std::vector<int> orders(n * static_cast<std::size_t>(iterations));
  std::vector<Coalition> prefixes{0};
  for (int m = 0; m < iterations; ++m) {
    auto order = std::span(orders).subspan(static_cast<std::size_t>(m) * n, n);
    const auto shift = static_cast<std::size_t>(m) % n;
    if (shift != 0) {
      // Rotation `shift` of the block's first order, so every player takes
      // every position once per block of n orders.
      const auto base = std::span(orders).subspan((static_cast<std::size_t>(m) - shift) * n, n);
      for (std::size_t j = 0; j < n; ++j) order[j] = base[(j + shift) % n];
    } else {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), stream);
    }
    Coalition q = 0;
    for (int player : order) prefixes.push_back(q |= Coalition{1} << player);
  }
  if (workers > 1) {
    std::sort(prefixes.begin(), prefixes.end());
    prefixes.erase(std::unique(prefixes.begin(), prefixes.end()), prefixes.end());
    chi.Prefetch(prefixes, workers);
  }

  std::vector<double> phi(n, 0.0);
  for (int m = 0; m < iterations; ++m) {
    Coalition q = 0;
    double previous = chi(q);
    for (int player : std::span(orders).subspan(static_cast<std::size_t>(m) * n, n)) {
      q |= Coalition{1} << player;
      const double current = chi(q);
      phi[static_cast<std::size_t>(player)] += current - previous;
      previous = current;
    }
  }
  for (double& v : phi) v /= static_cast<double>(iterations);
  return phi;
}

}  // namespace fedsim
