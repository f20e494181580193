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

#ifndef FEDSIM_MODEL_H_
#define FEDSIM_MODEL_H_

#include <vector>

#include "fedsim/dataset.h"
#include "fedsim/params.h"
#include "fedsim/rng.h"

namespace fedsim {

// Two small models with hand-derived gradients.
//
//   kClassification: input_dim features -> tanh MLP(hidden_dims) -> output_dim
//                    class logits.
//   kNextToken:      context_window token ids -> learned embedding table
//                    (output_dim x input_dim) -> concatenation ->
//                    tanh MLP(hidden_dims) -> output_dim token logits.
//
// Parameter layout (canonical order):
//   ["embedding" (next-token only)], "dense0.weight" [in x out],
//   "dense0.bias" [out], "dense1.weight", ...
struct ModelSpec {
  TaskKind kind = TaskKind::kClassification;
  int input_dim = 0;  // feature count, or embedding width for next-token
  std::vector<int> hidden_dims;
  int output_dim = 0;  // classes or vocabulary size
  int context_window = 1;

  void Validate() const;
  // Width of the first dense layer's input.
  int dense_input_dim() const;
};

// Weights ~ N(0, 1/fan_in), biases zero. The embedding table uses
// fan_in = input_dim (its row width).
ParamSet InitParams(const ModelSpec& spec, RngStream& stream);

// Throws StructuralError if `params` is not in the canonical layout of spec.
void RequireLayout(const ModelSpec& spec, const ParamSet& params);

struct LossAndGradient {
  double loss;  // mean cross-entropy, natural log
  ParamSet grad;
};

LossAndGradient LossAndGrad(const ModelSpec& spec, const ParamSet& params,
                            const Batch& batch);

// Loss only; skips the backward pass.
double MeanLoss(const ModelSpec& spec, const ParamSet& params, const Batch& batch);

// Softmax of the logits; one row per input row. Targets are ignored.
Matrix PredictDistribution(const ModelSpec& spec, const ParamSet& params,
                           const Dataset& inputs);

}  // namespace fedsim

#endif  // FEDSIM_MODEL_H_
