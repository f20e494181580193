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

#ifndef FEDSIM_PARAMS_H_
#define FEDSIM_PARAMS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fedsim/rng.h"

namespace fedsim {

// One named tensor of a model, stored row-major.
struct Layer {
  std::string id;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const Layer&, const Layer&) = default;
};

// Layered model parameters. Immutable once constructed: every operation in
// this header returns a fresh ParamSet.
//
// Invariants (checked by the constructor):
//   * at least one layer, every layer has at least one element;
//   * shape product equals the number of values;
//   * layer ids are unique;
//   * all values are finite.
class ParamSet {
 public:
  explicit ParamSet(std::vector<Layer> layers);

  std::span<const Layer> layers() const { return layers_; }
  const Layer& layer(std::size_t index) const { return layers_.at(index); }
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t parameter_count() const;

  // Same layer ids, order and shapes.
  bool CongruentWith(const ParamSet& other) const;

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<Layer> layers_;
};

// Throws StructuralError naming `context` and the first mismatch.
void RequireCongruent(const ParamSet& a, const ParamSet& b,
                      const std::string& context);

// p-norm of a flat vector. p may be +infinity (max norm).
double PNorm(std::span<const double> values, double p);

// s^l = ||a^l - b^l||_p for every layer l.
std::vector<double> LayerNormDiff(const ParamSet& a, const ParamSet& b,
                                  double p);

struct ScaledDelta {
  double coefficient;
  std::reference_wrapper<const ParamSet> delta;
};

// base + sum_i coefficient_i * delta_i, elementwise.
ParamSet AxpyCombine(const ParamSet& base, std::span<const ScaledDelta> terms);

// Congruent with `like`, elements i.i.d. N(0, sigma^2). Layers are filled in
// order from `stream`.
ParamSet GaussianLike(const ParamSet& like, double sigma, RngStream& stream);

ParamSet ZerosLike(const ParamSet& like);

// Content hash over ids, shapes and value bits.
std::uint64_t Fingerprint(const ParamSet& params);

// Binary form, little-endian:
//   "FSPS" | u32 version(=1) | u32 layer_count |
//   per layer: u32 id_len | id bytes | u32 rank | u64 dims[rank] |
//              f64 values[prod(dims)]  (row-major)
void WriteBinary(const ParamSet& params, std::ostream& out);
ParamSet ReadBinary(std::istream& in);

// JSON form: {"layers":[{"id":..,"shape":[..],"values":[..]}, ...]}.
// Values are printed with round-trip precision.
std::string ToJson(const ParamSet& params);
ParamSet FromJson(const std::string& text);

}  // namespace fedsim

#endif  // FEDSIM_PARAMS_H_
