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

#ifndef FEDSIM_SHAPLEY_H_
#define FEDSIM_SHAPLEY_H_

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "fedsim/rng.h"

namespace fedsim {

// Bit i set <=> player i is in the coalition.
using Coalition = std::uint64_t;

inline constexpr int kMaxPlayers = 63;
inline constexpr int kExactShapleyCap = 12;

// A memoized coalition utility Delta_Q. Copies share one cache. Safe for
// concurrent calls as long as the wrapped evaluator is.
class CharacteristicFn {
 public:
  using Evaluator = std::function<double(Coalition)>;

  CharacteristicFn(int num_players, Evaluator evaluator);

  int num_players() const { return num_players_; }
  double operator()(Coalition coalition) const;

  // Number of times the underlying evaluator ran.
  std::uint64_t evaluations() const { return state_->evaluations.load(); }

  // Evaluate `coalitions` on up to `workers` threads, filling the cache.
  void Prefetch(std::span<const Coalition> coalitions, int workers) const;

 private:
  struct State {
    Evaluator evaluator;
    mutable std::mutex mutex;
    std::unordered_map<Coalition, double> cache;
    std::atomic<std::uint64_t> evaluations{0};
  };

  int num_players_;
  std::shared_ptr<State> state_;
};

// phi_i = sum_{Q subset of S\{i}} |Q|!(n-|Q|-1)!/n! (Delta(Q+i) - Delta(Q)).
// Throws BudgetError when n exceeds `cap`.
std::vector<double> ShapleyExact(const CharacteristicFn& chi, int cap = kExactShapleyCap,
                                 int workers = 1);

// Permutation sampling: each of `iterations` orders yields one marginal for
// every player; the estimate is their mean. Orders come in blocks of n: a
// uniformly random order followed by its n-1 cyclic rotations. Every order
// is still uniform, and each player visits each position once per block,
// which removes most of the variance due to coalition size. All orders are
// drawn up front, so `workers` only changes how fast the coalitions are
// evaluated, never the result.
std::vector<double> ShapleyMonteCarlo(const CharacteristicFn& chi, int iterations,
                                      RngStream& stream, int workers = 1);

}  // namespace fedsim

#endif  // FEDSIM_SHAPLEY_H_
