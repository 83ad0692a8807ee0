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
#include "pcount/retailnet.hpp"

#include <json.hpp>

#include "pcount/errors.hpp"
#include "pcount/kernels.hpp"

namespace pcount {

using nlohmann::json;

void RetailNetConfig::validate() const {
  if (conv_layers < 1 || filters < 1) throw ConfigError("conv_layers and filters must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("kernel must be odd and >= 1");
  if (dense_layers < 0 || dense_units < 1) throw ConfigError("dense layers need >= 1 unit");
  (void)feature_shape(input_shape(), conv_layers, filters, kernel);
}

std::string serialize(const RetailNetConfig& c) {
  return json{{"conv_layers", c.conv_layers},   {"filters", c.filters},
              {"kernel", c.kernel},             {"dense_layers", c.dense_layers},
              {"dense_units", c.dense_units},   {"input_width", c.input_width},
              {"input_height", c.input_height}, {"input_channels", c.input_channels}}
      .dump();
}

RetailNetConfig parse_retailnet_config(const std::string& text) {
  try {
    const json j = json::parse(text);
    RetailNetConfig c;
    c.conv_layers = j.at("conv_layers").get<int>();
    c.filters = j.at("filters").get<int>();
    c.kernel = j.at("kernel").get<int>();
    c.dense_layers = j.at("dense_layers").get<int>();
    c.dense_units = j.at("dense_units").get<int>();
    c.input_width = j.at("input_width").get<int>();
    c.input_height = j.at("input_height").get<int>();
    c.input_channels = j.value("input_channels", 4);
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad RetailNet config: ") + e.what());
  }
}

template <typename Real>
RetailNetModel<Real> RetailNetModel<Real>::build(const RetailNetConfig& config, std::uint64_t seed) {
  config.validate();
  RetailNetModel m;
  m.config_ = config;
  m.shape_ = feature_shape(config.input_shape(), config.conv_layers, config.filters, config.kernel);
  Rng rng(seed);
  const int K = config.kernel, F = config.filters;
  int ch = config.input_channels;
  for (int c = 0; c < config.conv_layers; ++c) {
    auto w = make_group<Real>("conv" + std::to_string(c) + ".weight", {F, ch, K, K});
    glorot_uniform<Real>(w.values, ch * K * K, F * K * K, rng);
    m.params_.push_back(std::move(w));
    m.params_.push_back(make_group<Real>("conv" + std::to_string(c) + ".bias", {F}));
    ch = F;
  }
  int in = static_cast<int>(m.shape_.flattened());
  for (int d = 0; d < config.dense_layers; ++d) {
    auto w = make_group<Real>("dense" + std::to_string(d) + ".weight", {config.dense_units, in});
    glorot_uniform<Real>(w.values, in, config.dense_units, rng);
    m.params_.push_back(std::move(w));
    m.params_.push_back(make_group<Real>("dense" + std::to_string(d) + ".bias", {config.dense_units}));
    in = config.dense_units;
  }
  auto w = make_group<Real>("output.weight", {1, in});
  glorot_uniform<Real>(w.values, in, 1, rng);
  m.params_.push_back(std::move(w));
  m.params_.push_back(make_group<Real>("output.bias", {1}));
  return m;
}

template <typename Real>
RetailNetModel<Real> RetailNetModel<Real>::from_params(const RetailNetConfig& config,
                                                       std::vector<ParamGroup<Real>> params) {
  RetailNetModel m = build(config, 0);
  if (params.size() != m.params_.size()) throw ShapeError("parameter group count does not match the config");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape != m.params_[i].shape) throw ShapeError("parameter group '" + params[i].name + "' has the wrong shape");
    m.params_[i].values = std::move(params[i].values);
  }
  return m;
}

template <typename Real>
const Tensor3<Real>& RetailNetModel<Real>::last_frame(FrameSpan<Real> frames) const {
  if (frames.empty() || frames.back() == nullptr) throw ShapeError("empty input sequence");
  if (frames.back()->shape != config_.input_shape()) throw ShapeError("frame shape does not match the model input");
  return *frames.back();
}

template <typename Real>
Real RetailNetModel<Real>::forward(FrameSpan<Real> frames, Mode, Rng*) const {
  Trace trace;
  return forward_trace(frames, trace, nullptr);
}

template <typename Real>
std::vector<Real> RetailNetModel<Real>::frame_features(const Tensor3<Real>& frame, ConvTrace<Real>* trace) const {
  if (frame.shape != config_.input_shape()) throw ShapeError("frame shape does not match the model input");
  return conv_forward<Real>(shape_, conv_groups(), frame, trace);
}

template <typename Real>
bool RetailNetModel<Real>::conv_trainable() const {
  for (const auto& g : conv_groups())
    if (g.trainable) return true;
  return false;
}

template <typename Real>
Real RetailNetModel<Real>::head_forward(std::span<const std::vector<Real>* const> features, Trace& trace,
                                        Rng*) const {
  if (features.empty()) throw ShapeError("no features given");
  if (features.back()->size() != shape_.flattened()) throw ShapeError("cached features have the wrong length");
  trace.steps = features.size();
  std::vector<Real> x = *features.back();
  trace.act.clear();
  std::size_t g = 2 * config_.conv_layers;
  int in = static_cast<int>(x.size());
  for (int d = 0; d < config_.dense_layers; ++d, g += 2) {
    trace.act.push_back(x);
    std::vector<Real> y(params_[g + 1].values);
    kernels::matmul_rows<Real>(params_[g].values, config_.dense_units, in, x, 1, y);
    for (auto& v : y) v = v > Real(0) ? v : Real(0);
    x = std::move(y);
    in = config_.dense_units;
  }
  trace.act.push_back(x);
  Real out = params_[g + 1].values[0];
  for (int i = 0; i < in; ++i) out += params_[g].values[i] * x[i];
  return out;
}

template <typename Real>
void RetailNetModel<Real>::head_backward(const Trace& trace, Real dy, Gradients<Real>& grads,
                                         std::vector<std::vector<Real>>* dfeatures) const {
  std::size_t g = params_.size() - 2;
  const auto& top = trace.act.back();
  std::vector<Real> dx(top.size());
  for (std::size_t i = 0; i < top.size(); ++i) {
    if (params_[g].trainable) grads[g][i] += dy * top[i];
    dx[i] = dy * params_[g].values[i];
  }
  if (params_[g + 1].trainable) grads[g + 1][0] += dy;

  for (int d = config_.dense_layers - 1; d >= 0; --d) {
    g -= 2;
    const auto& in = trace.act[d];
    const auto& out = trace.act[d + 1];
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out[i] <= Real(0)) dx[i] = Real(0);
    std::vector<Real> din(d > 0 || dfeatures ? in.size() : 0, Real(0));
    kernels::matmul_rows_backward<Real>(params_[g].values, config_.dense_units, static_cast<int>(in.size()), in, 1,
                                        dx, params_[g].trainable ? std::span<Real>(grads[g]) : std::span<Real>(), din);
    if (params_[g + 1].trainable)
      for (std::size_t i = 0; i < dx.size(); ++i) grads[g + 1][i] += dx[i];
    dx = std::move(din);
  }
  if (!dfeatures) return;
  dfeatures->assign(trace.steps, {});
  dfeatures->back() = std::move(dx);
}

template <typename Real>
Real RetailNetModel<Real>::forward_trace(FrameSpan<Real> frames, Trace& trace, Rng* rng) const {
  const auto& frame = last_frame(frames);
  const std::vector<Real> feats = conv_forward<Real>(shape_, conv_groups(), frame, &trace.conv);
  const std::vector<Real>* ptr = &feats;
  return head_forward(std::span<const std::vector<Real>* const>(&ptr, 1), trace, rng);
}

template <typename Real>
void RetailNetModel<Real>::backward(FrameSpan<Real> frames, const Trace& trace, Real dy,
                                    Gradients<Real>& grads, std::vector<Tensor3<Real>>* input_grads) const {
  const auto& frame = last_frame(frames);
  std::vector<std::vector<Real>> dfeat;
  head_backward(trace, dy, grads, &dfeat);
  Tensor3<Real> dframe;
  conv_backward<Real>(shape_, conv_groups(), frame, trace.conv, dfeat.back(),
                      std::span<std::vector<Real>>(grads.data(), 2 * config_.conv_layers),
                      input_grads ? &dframe : nullptr);
  if (input_grads) {
    input_grads->assign(frames.size(), Tensor3<Real>(frame.shape));
    input_grads->back() = std::move(dframe);
  }
}

template <typename Real>
std::int64_t RetailNetModel<Real>::count_params() const {
  std::int64_t n = 0;
  for (const auto& g : params_) n += static_cast<std::int64_t>(g.size());
  return n;
}

template <typename Real>
std::int64_t RetailNetModel<Real>::count_trainable_params() const {
  std::int64_t n = 0;
  for (const auto& g : params_)
    if (g.trainable) n += static_cast<std::int64_t>(g.size());
  return n;
}

template <typename Real>
ConvWeights<Real> RetailNetModel<Real>::conv_weights() const {
  ConvWeights<Real> cw;
  cw.input = config_.input_shape();
  cw.conv_layers = config_.conv_layers;
  cw.filters = config_.filters;
  cw.kernel = config_.kernel;
  cw.groups.assign(params_.begin(), params_.begin() + 2 * config_.conv_layers);
  return cw;
}

template class RetailNetModel<float>;
template class RetailNetModel<double>;

}  // namespace pcount
