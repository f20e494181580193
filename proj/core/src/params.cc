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

#include "fedsim/params.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "fedsim/errors.h"

namespace fedsim {
namespace {

std::string ShapeString(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
void PutLE(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "binary ParamSet I/O assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T GetLE(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated ParamSet stream");
  return value;
}

}  // namespace

ParamSet::ParamSet(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw StructuralError("ParamSet needs at least one layer");
  std::set<std::string> ids;
  for (const Layer& layer : layers_) {
    if (!ids.insert(layer.id).second) {
      throw StructuralError("duplicate layer id '" + layer.id + "'");
    }
    std::size_t expected = 1;
    for (std::size_t d : layer.shape) expected *= d;
    if (layer.shape.empty() || expected != layer.values.size()) {
      throw StructuralError("layer '" + layer.id + "' has shape " +
                            ShapeString(layer.shape) + " but " +
                            std::to_string(layer.values.size()) + " values");
    }
    if (layer.values.empty()) {
      throw StructuralError("layer '" + layer.id + "' is empty");
    }
    for (double v : layer.values) {
      if (!std::isfinite(v)) {
        throw NumericError("non-finite value in layer '" + layer.id + "'");
      }
    }
  }
}

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& layer : layers_) n += layer.size();
  return n;
}

bool ParamSet::CongruentWith(const ParamSet& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].id != other.layers_[i].id ||
        layers_[i].shape != other.layers_[i].shape) {
      return false;
    }
  }
  return true;
}

void RequireCongruent(const ParamSet& a, const ParamSet& b,
                      const std::string& context) {
  if (a.layer_count() != b.layer_count()) {
    throw StructuralError(context + ": layer count " +
                          std::to_string(a.layer_count()) + " vs " +
                          std::to_string(b.layer_count()));
  }
  for (std::size_t i = 0; i < a.layer_count(); ++i) {
    const Layer& la = a.layer(i);
    const Layer& lb = b.layer(i);
    if (la.id != lb.id || la.shape != lb.shape) {
      throw StructuralError(context + ": layer " + std::to_string(i) + " is '" +
                            la.id + "' " + ShapeString(la.shape) + " vs '" +
                            lb.id + "' " + ShapeString(lb.shape));
    }
  }
}

double PNorm(std::span<const double> values, double p) {
  if (!(p >= 1.0)) throw DomainError("norm order must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  if (p == 2.0) {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
  }
  if (p == 1.0) {
    double s = 0.0;
    for (double v : values) s += std::abs(v);
    return s;
  }
  double s = 0.0;
  for (double v : values) s += std::pow(std::abs(v), p);
  return std::pow(s, 1.0 / p);
}

std::vector<double> LayerNormDiff(const ParamSet& a, const ParamSet& b,
                                  double p) {
  if (!(p >= 1.0)) throw DomainError("norm order must be >= 1");
  RequireCongruent(a, b, "layer_norm_diff");
  std::vector<double> out;
  out.reserve(a.layer_count());
  std::vector<double> diff;
  for (std::size_t l = 0; l < a.layer_count(); ++l) {
    const auto& va = a.layer(l).values;
    const auto& vb = b.layer(l).values;
    diff.resize(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) diff[i] = va[i] - vb[i];
    out.push_back(PNorm(diff, p));
  }
  return out;
}

ParamSet AxpyCombine(const ParamSet& base, std::span<const ScaledDelta> terms) {
  for (const ScaledDelta& term : terms) {
    RequireCongruent(base, term.delta.get(), "axpy_combine");
  }
  std::vector<Layer> layers(base.layers().begin(), base.layers().end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& values = layers[l].values;
    for (const ScaledDelta& term : terms) {
      const auto& delta = term.delta.get().layer(l).values;
      const double c = term.coefficient;
      for (std::size_t i = 0; i < values.size(); ++i) values[i] += c * delta[i];
    }
    for (double v : values) {
      if (!std::isfinite(v)) {
        throw NumericError("axpy_combine produced a non-finite value in layer '" +
                           layers[l].id + "'");
      }
    }
  }
  return ParamSet(std::move(layers));
}

ParamSet GaussianLike(const ParamSet& like, double sigma, RngStream& stream) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw DomainError("gaussian_like: sigma must be finite and >= 0");
  }
  std::vector<Layer> layers(like.layers().begin(), like.layers().end());
  if (sigma == 0.0) {
    for (Layer& layer : layers) std::fill(layer.values.begin(), layer.values.end(), 0.0);
    return ParamSet(std::move(layers));
  }
  std::normal_distribution<double> normal(0.0, sigma);
  for (Layer& layer : layers) {
    for (double& v : layer.values) v = normal(stream);
  }
  return ParamSet(std::move(layers));
}

ParamSet ZerosLike(const ParamSet& like) {
  std::vector<Layer> layers(like.layers().begin(), like.layers().end());
  for (Layer& layer : layers) std::fill(layer.values.begin(), layer.values.end(), 0.0);
  return ParamSet(std::move(layers));
}

std::uint64_t Fingerprint(const ParamSet& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Layer& layer : params.layers()) {
    h = Fnv1a64(layer.id, h);
    for (std::size_t d : layer.shape) {
      h = Fnv1a64(std::string_view(reinterpret_cast<const char*>(&d), sizeof d), h);
    }
    h = Fnv1a64(std::string_view(reinterpret_cast<const char*>(layer.values.data()),
                                 layer.values.size() * sizeof(double)),
                h);
  }
  return h;
}

void WriteBinary(const ParamSet& params, std::ostream& out) {
  out.write("FSPS", 4);
  PutLE<std::uint32_t>(out, 1);
  PutLE<std::uint32_t>(out, static_cast<std::uint32_t>(params.layer_count()));
  for (const Layer& layer : params.layers()) {
    PutLE<std::uint32_t>(out, static_cast<std::uint32_t>(layer.id.size()));
    out.write(layer.id.data(), static_cast<std::streamsize>(layer.id.size()));
    PutLE<std::uint32_t>(out, static_cast<std::uint32_t>(layer.shape.size()));
    for (std::size_t d : layer.shape) PutLE<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(layer.values.data()),
              static_cast<std::streamsize>(layer.values.size() * sizeof(double)));
  }
  if (!out) throw IoError("failed writing ParamSet");
}

ParamSet ReadBinary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "FSPS", 4) != 0) {
    throw IoError("not a ParamSet stream (bad magic)");
  }
  if (GetLE<std::uint32_t>(in) != 1) throw IoError("unsupported ParamSet version");
  const auto count = GetLE<std::uint32_t>(in);
  std::vector<Layer> layers(count);
  for (Layer& layer : layers) {
    layer.id.resize(GetLE<std::uint32_t>(in));
    in.read(layer.id.data(), static_cast<std::streamsize>(layer.id.size()));
    const auto rank = GetLE<std::uint32_t>(in);
    std::size_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      layer.shape.push_back(static_cast<std::size_t>(GetLE<std::uint64_t>(in)));
      n *= layer.shape.back();
    }
    if (n > (std::size_t{1} << 32)) throw IoError("implausible layer size");
    layer.values.resize(n);
    in.read(reinterpret_cast<char*>(layer.values.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw IoError("truncated ParamSet stream");
  }
  return ParamSet(std::move(layers));
}

std::string ToJson(const ParamSet& params) {
  nlohmann::json doc;
  doc["layers"] = nlohmann::json::array();
  for (const Layer& layer : params.layers()) {
    doc["layers"].push_back({{"id", layer.id}, {"shape", layer.shape}, {"values", layer.values}});
  }
  return doc.dump();
}

ParamSet FromJson(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    std::vector<Layer> layers;
    for (const auto& item : doc.at("layers")) {
      layers.push_back(Layer{item.at("id").get<std::string>(),
                             item.at("shape").get<std::vector<std::size_t>>(),
                             item.at("values").get<std::vector<double>>()});
    }
    return ParamSet(std::move(layers));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed ParamSet JSON: ") + e.what());
  }
}

}  // namespace fedsim
