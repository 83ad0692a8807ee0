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
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "pcount/frame.hpp"
#include "pcount/nn.hpp"

namespace pcount {

struct LrcnConfig {
  int conv_layers = 3;
  int filters = 8;
  int kernel = 5;
  std::vector<int> lstm_units{250};
  int seq_len = 9;
  int input_width = kFrameWidth;
  int input_height = kFrameHeight;
  int input_channels = 4;
  double dropout = 0.3;
  bool conv_frozen = false;

  [[nodiscard]] Shape3 input_shape() const { return {input_channels, input_height, input_width}; }
  [[nodiscard]] int lstm_layers() const { return static_cast<int>(lstm_units.size()); }
  /// Throws ConfigError on C,F,K,L,T < 1, any unit count < 1, even K, a
  /// dropout outside [0,1) or an input the conv blocks would collapse.
  void validate() const;

  friend bool operator==(const LrcnConfig&, const LrcnConfig&) = default;
};

std::string serialize(const LrcnConfig& config);
LrcnConfig parse_lrcn_config(const std::string& json_text);

/// Closed-form trainable parameter count (no model allocation), counting conv
/// parameters only when the conv blocks are not frozen.
std::int64_t count_trainable_params(const LrcnConfig& config);

/// Convolutional weights lifted out of a trained model for transfer learning.
template <typename Real>
struct ConvWeights {
  Shape3 input;
  int conv_layers = 0;
  int filters = 0;
  int kernel = 0;
  std::vector<ParamGroup<Real>> groups;  // (weight, bias) per block
};

/// Recurrent convolutional regressor: every frame passes C conv(ReLU)+2x2
/// max-pool blocks, the flattened features feed L stacked LSTM layers step by
/// step, and one linear neuron reads the last LSTM layer's final output.
///
/// Parameter groups, in order: conv{c}.weight, conv{c}.bias for each block,
/// lstm{l}.kernel, lstm{l}.recurrent, lstm{l}.bias for each layer, then
/// output.weight and output.bias.
template <typename Real>
class LrcnModel {
 public:
  struct Trace {
    std::vector<ConvTrace<Real>> conv;  // per frame
    std::vector<LstmTrace<Real>> lstm;  // per layer
    std::vector<Real> last;             // final-step output of the last layer
  };

  LrcnModel() = default;
  /// Allocates and initializes parameters (fan-based uniform, forget bias 1).
  static LrcnModel build(const LrcnConfig& config, std::uint64_t seed = 0);
  /// Adopts existing parameter values; shapes must match \p config.
  static LrcnModel from_params(const LrcnConfig& config, std::vector<ParamGroup<Real>> params);

  /// Eval mode is deterministic. Train mode applies dropout drawn from \p rng.
  Real forward(FrameSpan<Real> frames, Mode mode = Mode::eval, Rng* rng = nullptr) const;

  /// Features of one frame; the recurrent part can be replayed from cached
  /// features with forward_features().
  std::vector<Real> frame_features(const Tensor3<Real>& frame) const;
  Real forward_features(std::span<const std::vector<Real>* const> features) const;

  /// Conv stage of one frame, optionally keeping what conv backward needs.
  std::vector<Real> frame_features(const Tensor3<Real>& frame, ConvTrace<Real>* trace) const;
  /// Recurrent stage and readout on per-step features; fills trace.lstm and trace.last.
  Real head_forward(std::span<const std::vector<Real>* const> features, Trace& trace, Rng* dropout_rng) const;
  /// Backward through the recurrent stage. \p dfeatures, when given, receives
  /// one gradient vector per step.
  void head_backward(const Trace& trace, Real dy, Gradients<Real>& grads,
                     std::vector<std::vector<Real>>* dfeatures) const;
  [[nodiscard]] std::span<const ParamGroup<Real>> conv_groups() const;
  [[nodiscard]] bool conv_trainable() const;

  /// Forward keeping everything backward() needs. \p dropout_rng null means eval.
  Real forward_trace(FrameSpan<Real> frames, Trace& trace, Rng* dropout_rng) const;
  /// Accumulates dy * d(output)/d(param) into \p grads for trainable groups.
  /// When \p input_grads is given it receives dy * d(output)/d(frame) per frame.
  void backward(FrameSpan<Real> frames, const Trace& trace, Real dy, Gradients<Real>& grads,
                std::vector<Tensor3<Real>>* input_grads = nullptr) const;

  [[nodiscard]] const LrcnConfig& config() const { return config_; }
  [[nodiscard]] const FeatureShape& features_shape() const { return shape_; }
  [[nodiscard]] std::vector<ParamGroup<Real>>& params() { return params_; }
  [[nodiscard]] const std::vector<ParamGroup<Real>>& params() const { return params_; }
  [[nodiscard]] int seq_len() const { return config_.seq_len; }
  [[nodiscard]] Shape3 input_shape() const { return config_.input_shape(); }

  [[nodiscard]] std::int64_t count_params() const;
  [[nodiscard]] std::int64_t count_trainable_params() const;

  [[nodiscard]] ConvWeights<Real> conv_weights() const;
  /// Copies conv weights from \p source and freezes the conv blocks.
  void transfer_conv_weights(const ConvWeights<Real>& source);
  /// Marks every parameter group trainable. Values are untouched.
  void set_fine_tune();
  void set_conv_frozen(bool frozen);

 private:
  void check_frames(FrameSpan<Real> frames) const;
  std::span<const ParamGroup<Real>> lstm_groups(int layer) const;
  int lstm_input(int layer) const;

  LrcnConfig config_;
  FeatureShape shape_;
  std::vector<ParamGroup<Real>> params_;
};

/// Count reported for a raw regression output: nearest integer (halves away
/// from zero), negatives clamped to 0.
std::int64_t round_count(double raw);

template <typename Real>
std::int64_t predict_count(const LrcnModel<Real>& model, std::type_identity_t<FrameSpan<Real>> frames) {
  return round_count(static_cast<double>(model.forward(frames, Mode::eval)));
}

}  // namespace pcount
