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

#include <cstdint>
#include <string>
#include <vector>

#include "pcount/lrcn.hpp"

namespace pcount {

/// Single-image baseline: C conv blocks, dense ReLU layers, one linear neuron.
struct RetailNetConfig {
  int conv_layers = 3;
  int filters = 8;
  int kernel = 5;
  int dense_layers = 2;
  int dense_units = 16;
  int input_width = kFrameWidth;
  int input_height = kFrameHeight;
  int input_channels = 4;

  [[nodiscard]] Shape3 input_shape() const { return {input_channels, input_height, input_width}; }
  void validate() const;
  friend bool operator==(const RetailNetConfig&, const RetailNetConfig&) = default;
};

std::string serialize(const RetailNetConfig& config);
RetailNetConfig parse_retailnet_config(const std::string& json_text);

/// Regresses the count of the last frame of whatever sequence it is given, so
/// it trains on the same sequence datasets as LrcnModel.
template <typename Real>
class RetailNetModel {
 public:
  struct Trace {
    ConvTrace<Real> conv;
    std::vector<std::vector<Real>> act;  // input to each dense layer, then input to the output
    std::size_t steps = 1;
  };

  RetailNetModel() = default;
  static RetailNetModel build(const RetailNetConfig& config, std::uint64_t seed = 0);
  static RetailNetModel from_params(const RetailNetConfig& config, std::vector<ParamGroup<Real>> params);

  Real forward(FrameSpan<Real> frames, Mode mode = Mode::eval, Rng* rng = nullptr) const;
  Real forward_trace(FrameSpan<Real> frames, Trace& trace, Rng* dropout_rng) const;
  std::vector<Real> frame_features(const Tensor3<Real>& frame, ConvTrace<Real>* trace = nullptr) const;
  /// Dense stage on the features of the last step only.
  Real head_forward(std::span<const std::vector<Real>* const> features, Trace& trace, Rng* dropout_rng) const;
  /// Only the last entry of \p dfeatures is filled; earlier steps do not
  /// influence the output and are left empty.
  void head_backward(const Trace& trace, Real dy, Gradients<Real>& grads,
                     std::vector<std::vector<Real>>* dfeatures) const;
  [[nodiscard]] std::span<const ParamGroup<Real>> conv_groups() const {
    return {params_.data(), static_cast<std::size_t>(2 * config_.conv_layers)};
  }
  [[nodiscard]] bool conv_trainable() const;
  [[nodiscard]] const FeatureShape& features_shape() const { return shape_; }
  void backward(FrameSpan<Real> frames, const Trace& trace, Real dy, Gradients<Real>& grads,
                std::vector<Tensor3<Real>>* input_grads = nullptr) const;

  [[nodiscard]] const RetailNetConfig& config() const { return config_; }
  [[nodiscard]] std::vector<ParamGroup<Real>>& params() { return params_; }
  [[nodiscard]] const std::vector<ParamGroup<Real>>& params() const { return params_; }
  [[nodiscard]] int seq_len() const { return 1; }
  [[nodiscard]] Shape3 input_shape() const { return config_.input_shape(); }
  [[nodiscard]] std::int64_t count_params() const;
  [[nodiscard]] std::int64_t count_trainable_params() const;
  [[nodiscard]] ConvWeights<Real> conv_weights() const;

 private:
  const Tensor3<Real>& last_frame(FrameSpan<Real> frames) const;

  RetailNetConfig config_;
  FeatureShape shape_;
  std::vector<ParamGroup<Real>> params_;
};

}  // namespace pcount
