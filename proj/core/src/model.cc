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

#include "fedsim/model.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "fedsim/errors.h"

namespace fedsim {
namespace {

std::string WeightId(std::size_t i) { return "dense" + std::to_string(i) + ".weight"; }
std::string BiasId(std::size_t i) { return "dense" + std::to_string(i) + ".bias"; }

// Widths of every dense layer boundary: [dense_input, hidden..., output].
std::vector<std::size_t> DenseWidths(const ModelSpec& spec) {
  std::vector<std::size_t> widths;
  widths.push_back(static_cast<std::size_t>(spec.dense_input_dim()));
  for (int h : spec.hidden_dims) widths.push_back(static_cast<std::size_t>(h));
  widths.push_back(static_cast<std::size_t>(spec.output_dim));
  return widths;
}

bool HasEmbedding(const ModelSpec& spec) { return spec.kind == TaskKind::kNextToken; }

void CheckBatch(const ModelSpec& spec, const Dataset& data, bool need_targets) {
  if (data.task != spec.kind) throw DataError("dataset task does not match model kind");
  if (data.empty()) throw DataError("empty batch");
  if (spec.kind == TaskKind::kClassification) {
    if (data.width != static_cast<std::size_t>(spec.input_dim) ||
        data.features.size() != data.size() * data.width) {
      throw DataError("feature rows do not match input_dim " +
                      std::to_string(spec.input_dim));
    }
  } else {
    if (data.width != static_cast<std::size_t>(spec.context_window) ||
        data.contexts.size() != data.size() * data.width) {
      throw DataError("context rows do not match context_window " +
                      std::to_string(spec.context_window));
    }
    for (int t : data.contexts) {
      if (t < 0 || t >= spec.output_dim) {
        throw DataError("context token id " + std::to_string(t) + " out of range");
      }
    }
  }
  if (need_targets) {
    for (int t : data.targets) {
      if (t < 0 || t >= spec.output_dim) {
        throw DataError("target id " + std::to_string(t) + " out of range");
      }
    }
  }
}

// Activations of one forward pass. acts[0] is the dense input, acts[i] the
// output of dense layer i-1 after tanh (the last entry holds raw logits).
struct Forward {
  std::vector<std::vector<double>> acts;
};

Forward RunForward(const ModelSpec& spec, const ParamSet& params, const Dataset& data) {
  const auto widths = DenseWidths(spec);
  const std::size_t rows = data.size();
  Forward fwd;
  fwd.acts.resize(widths.size());

  std::size_t offset = 0;
  if (HasEmbedding(spec)) {
    const auto& table = params.layer(0).values;
    const std::size_t e = static_cast<std::size_t>(spec.input_dim);
    auto& x = fwd.acts[0];
    x.assign(rows * widths[0], 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      auto ctx = data.context_row(r);
      for (std::size_t j = 0; j < ctx.size(); ++j) {
        const double* src = table.data() + static_cast<std::size_t>(ctx[j]) * e;
        std::copy(src, src + e, x.data() + r * widths[0] + j * e);
      }
    }
    offset = 1;
  } else {
    fwd.acts[0] = data.features;
  }

  const std::size_t dense_count = widths.size() - 1;
  for (std::size_t i = 0; i < dense_count; ++i) {
    const std::size_t in = widths[i], out = widths[i + 1];
    const auto& w = params.layer(offset + 2 * i).values;
    const auto& b = params.layer(offset + 2 * i + 1).values;
    const auto& x = fwd.acts[i];
    auto& z = fwd.acts[i + 1];
    z.assign(rows * out, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      double* zr = z.data() + r * out;
      std::copy(b.begin(), b.end(), zr);
      const double* xr = x.data() + r * in;
      for (std::size_t k = 0; k < in; ++k) {
        const double xv = xr[k];
        if (xv == 0.0) continue;
        const double* wk = w.data() + k * out;
        for (std::size_t j = 0; j < out; ++j) zr[j] += xv * wk[j];
      }
    }
    if (i + 1 < dense_count) {
      for (double& v : z) v = std::tanh(v);
    }
  }
  return fwd;
}

// In-place row softmax; returns per-row log-sum-exp.
std::vector<double> SoftmaxRows(std::vector<double>& logits, std::size_t cols) {
  const std::size_t rows = logits.size() / cols;
  std::vector<double> lse(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double* z = logits.data() + r * cols;
    const double m = *std::max_element(z, z + cols);
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += std::exp(z[j] - m);
    lse[r] = m + std::log(s);
    for (std::size_t j = 0; j < cols; ++j) z[j] = std::exp(z[j] - lse[r]);
  }
  return lse;
}

}  // namespace

void ModelSpec::Validate() const {
  if (output_dim < 2) throw ConfigError("model.output_dim must be >= 2");
  if (input_dim < 1) throw ConfigError("model.input_dim must be >= 1");
  for (int h : hidden_dims) {
    if (h < 1) throw ConfigError("model.hidden_dims entries must be >= 1");
  }
  if (kind == TaskKind::kNextToken && context_window < 1) {
    throw ConfigError("model.context_window must be >= 1");
  }
}

int ModelSpec::dense_input_dim() const {
  return kind == TaskKind::kNextToken ? context_window * input_dim : input_dim;
}

ParamSet InitParams(const ModelSpec& spec, RngStream& stream) {
  spec.Validate();
  std::vector<Layer> layers;
  if (HasEmbedding(spec)) {
    const auto v = static_cast<std::size_t>(spec.output_dim);
    const auto e = static_cast<std::size_t>(spec.input_dim);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(e)));
    Layer emb{"embedding", {v, e}, std::vector<double>(v * e)};
    for (double& x : emb.values) x = normal(stream);
    layers.push_back(std::move(emb));
  }
  const auto widths = DenseWidths(spec);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t in = widths[i], out = widths[i + 1];
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
    Layer w{WeightId(i), {in, out}, std::vector<double>(in * out)};
    for (double& x : w.values) x = normal(stream);
    layers.push_back(std::move(w));
    layers.push_back(Layer{BiasId(i), {out}, std::vector<double>(out, 0.0)});
  }
  return ParamSet(std::move(layers));
}

void RequireLayout(const ModelSpec& spec, const ParamSet& params) {
  spec.Validate();
  std::vector<std::pair<std::string, std::vector<std::size_t>>> expected;
  if (HasEmbedding(spec)) {
    expected.push_back({"embedding", {static_cast<std::size_t>(spec.output_dim),
                                      static_cast<std::size_t>(spec.input_dim)}});
  }
  const auto widths = DenseWidths(spec);
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    expected.push_back({WeightId(i), {widths[i], widths[i + 1]}});
    expected.push_back({BiasId(i), {widths[i + 1]}});
  }
  bool ok = params.layer_count() == expected.size();
  for (std::size_t l = 0; ok && l < expected.size(); ++l) {
    ok = params.layer(l).id == expected[l].first && params.layer(l).shape == expected[l].second;
  }
  if (!ok) throw StructuralError("parameters do not match the model's canonical layout");
}

LossAndGradient LossAndGrad(const ModelSpec& spec, const ParamSet& params,
                            const Batch& batch) {
  RequireLayout(spec, params);
  CheckBatch(spec, batch, /*need_targets=*/true);
  Forward fwd = RunForward(spec, params, batch);
  const auto widths = DenseWidths(spec);
  const std::size_t rows = batch.size();
  const std::size_t classes = widths.back();
  const double inv_rows = 1.0 / static_cast<double>(rows);

  // dZ of the output layer: (softmax - onehot) / rows.
  std::vector<double> delta = fwd.acts.back();
  const auto lse = SoftmaxRows(delta, classes);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto t = static_cast<std::size_t>(batch.targets[r]);
    loss += lse[r] - fwd.acts.back()[r * classes + t];
    delta[r * classes + t] -= 1.0;
  }
  loss *= inv_rows;
  for (double& d : delta) d *= inv_rows;

  std::vector<Layer> grads(params.layers().begin(), params.layers().end());
  for (Layer& g : grads) std::fill(g.values.begin(), g.values.end(), 0.0);
  const std::size_t offset = HasEmbedding(spec) ? 1 : 0;

  for (std::size_t i = widths.size() - 1; i-- > 0;) {
    const std::size_t in = widths[i], out = widths[i + 1];
    const auto& x = fwd.acts[i];
    const auto& w = params.layer(offset + 2 * i).values;
    auto& gw = grads[offset + 2 * i].values;
    auto& gb = grads[offset + 2 * i + 1].values;
    std::vector<double> dx(rows * in, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* dr = delta.data() + r * out;
      const double* xr = x.data() + r * in;
      double* dxr = dx.data() + r * in;
      for (std::size_t j = 0; j < out; ++j) gb[j] += dr[j];
      for (std::size_t k = 0; k < in; ++k) {
        const double* wk = w.data() + k * out;
        double* gwk = gw.data() + k * out;
        const double xv = xr[k];
        double acc = 0.0;
        for (std::size_t j = 0; j < out; ++j) {
          gwk[j] += xv * dr[j];
          acc += wk[j] * dr[j];
        }
        dxr[k] = acc;
      }
    }
    if (i > 0) {
      // x = tanh(z) for hidden layers.
      for (std::size_t n = 0; n < dx.size(); ++n) dx[n] *= 1.0 - x[n] * x[n];
    }
    delta = std::move(dx);
  }

  if (HasEmbedding(spec)) {
    const std::size_t e = static_cast<std::size_t>(spec.input_dim);
    auto& ge = grads[0].values;
    for (std::size_t r = 0; r < rows; ++r) {
      auto ctx = batch.context_row(r);
      for (std::size_t j = 0; j < ctx.size(); ++j) {
        const double* src = delta.data() + r * widths[0] + j * e;
        double* dst = ge.data() + static_cast<std::size_t>(ctx[j]) * e;
        for (std::size_t d = 0; d < e; ++d) dst[d] += src[d];
      }
    }
  }
  return {loss, ParamSet(std::move(grads))};
}

double MeanLoss(const ModelSpec& spec, const ParamSet& params, const Batch& batch) {
  RequireLayout(spec, params);
  CheckBatch(spec, batch, /*need_targets=*/true);
  Forward fwd = RunForward(spec, params, batch);
  const std::size_t classes = static_cast<std::size_t>(spec.output_dim);
  std::vector<double> probs = fwd.acts.back();
  const auto lse = SoftmaxRows(probs, classes);
  double loss = 0.0;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    loss += lse[r] - fwd.acts.back()[r * classes + static_cast<std::size_t>(batch.targets[r])];
  }
  return loss / static_cast<double>(batch.size());
}

Matrix PredictDistribution(const ModelSpec& spec, const ParamSet& params,
                           const Dataset& inputs) {
  RequireLayout(spec, params);
  CheckBatch(spec, inputs, /*need_targets=*/false);
  Forward fwd = RunForward(spec, params, inputs);
  Matrix out;
  out.cols = static_cast<std::size_t>(spec.output_dim);
  out.rows = inputs.size();
  out.values = std::move(fwd.acts.back());
  SoftmaxRows(out.values, out.cols);
  return out;
}

}  // namespace fedsim
