// Copyright 2026 The pcount Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Layer building blocks shared by the recurrent counter and the single-image
// baseline: parameter groups, the conv/ReLU/max-pool feature extractor, stacked
// LSTM layers and dense layers, each with a forward trace and a backward pass.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pcount/tensor.hpp"

namespace pcount {

using Rng = std::mt19937_64;

enum class Mode { train, eval };

template <typename Real>
struct ParamGroup {
  std::string name;
  std::vector<int> shape;
  std::vector<Real> values;
  bool trainable = true;

  [[nodiscard]] std::size_t size() const { return values.size(); }
};

/// One gradient buffer per parameter group, aligned by index.
template <typename Real>
using Gradients = std::vector<std::vector<Real>>;

template <typename Real>
Gradients<Real> zero_gradients(const std::vector<ParamGroup<Real>>& params);

template <typename Real>
ParamGroup<Real> make_group(std::string name, std::vector<int> shape);

/// Uniform(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)).
template <typename Real>
void glorot_uniform(std::span<Real> values, int fan_in, int fan_out, Rng& rng);

// ---- convolutional feature extractor ----------------------------------------

/// Spatial bookkeeping of C blocks of valid KxK conv + 2x2 floor max-pool.
struct FeatureShape {
  Shape3 input;
  int kernel = 0;
  std::vector<Shape3> conv;    // pre-pool output of each block
  std::vector<Shape3> pooled;  // output of each block
  [[nodiscard]] const Shape3& output() const { return pooled.back(); }
  [[nodiscard]] std::size_t flattened() const { return output().size(); }
};

/// Throws ConfigError when a block would shrink a spatial dim below 1.
FeatureShape feature_shape(Shape3 input, int conv_layers, int filters, int kernel);

/// Parameters of conv layer c: (in_channels * K^2 + 1) * F.
std::int64_t conv_param_count(int in_channels, int filters, int kernel);

template <typename Real>
struct ConvTrace {
  std::vector<std::vector<Real>> pre;     // conv output before ReLU, per block
  std::vector<std::vector<Real>> pooled;  // block outputs
  std::vector<std::vector<std::int32_t>> argmax;
};

/// Runs one frame through the blocks. \p params holds (weight, bias) per block.
/// Returns the flattened features (channel-major).
template <typename Real>
std::vector<Real> conv_forward(const FeatureShape& shape, std::span<const ParamGroup<Real>> params,
                               const Tensor3<Real>& frame, ConvTrace<Real>* trace = nullptr);

/// Backpropagates dL/dfeatures. Parameter gradients are only accumulated for
/// trainable groups; \p dinput (optional) receives dL/dframe.
template <typename Real>
void conv_backward(const FeatureShape& shape, std::span<const ParamGroup<Real>> params,
                   const Tensor3<Real>& frame, const ConvTrace<Real>& trace,
                   std::span<const Real> dfeatures, std::span<std::vector<Real>> grads,
                   Tensor3<Real>* dinput = nullptr);

// ---- LSTM ---------------------------------------------------------------------

/// Gate order within the 4U rows: input, forget, cell candidate, output.
template <typename Real>
struct LstmTrace {
  int steps = 0;
  std::vector<Real> x;      // steps x n_in
  std::vector<Real> gates;  // steps x 4U, post-activation
  std::vector<Real> c;      // steps x U
  std::vector<Real> tanh_c; // steps x U
  std::vector<Real> h;      // steps x U (before dropout)
  std::vector<Real> mask;   // steps x U dropout scale, empty in eval mode
};

/// params = (kernel [4U x n_in], recurrent [4U x U], bias [4U]). x is steps x n_in.
/// Returns steps x U outputs, dropout applied when \p dropout_rng is non-null.
template <typename Real>
std::vector<Real> lstm_forward(std::span<const ParamGroup<Real>> params, int n_in, int units,
                               std::vector<Real> x, int steps, double dropout, Rng* dropout_rng,
                               LstmTrace<Real>* trace = nullptr);

/// dout is steps x U (gradient w.r.t. the dropped outputs). Accumulates into
/// grads (3 buffers) and, when non-empty, dx (steps x n_in).
template <typename Real>
void lstm_backward(std::span<const ParamGroup<Real>> params, int n_in, int units,
                   const LstmTrace<Real>& trace, std::span<const Real> dout,
                   std::span<std::vector<Real>> grads, std::span<Real> dx);

}  // namespace pcount
