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

#ifndef FEDSIM_RNG_H_
#define FEDSIM_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace fedsim {

using RngStream = std::mt19937_64;

// Derives independent generators for every stochastic site of a run from a
// single master seed. A site is identified by (label, round, agent); the same
// tuple always yields the same stream, so the order in which sites are
// visited (for example by parallel workers) cannot change any draw.
class StreamFactory {
 public:
  explicit StreamFactory(std::uint64_t master_seed) : master_seed_(master_seed) {}

  RngStream Derive(std::string_view site, std::int64_t round = 0,
                   std::int64_t agent = 0) const;

  std::uint64_t master_seed() const { return master_seed_; }

 private:
  std::uint64_t master_seed_;
};

std::uint64_t SplitMix64(std::uint64_t x);
std::uint64_t Fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace fedsim

#endif  // FEDSIM_RNG_H_
