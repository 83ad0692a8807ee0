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
#include "pcount/lrcn.hpp"

#include <cmath>
#include <json.hpp>

#include "pcount/errors.hpp"

namespace pcount {

using nlohmann::json;

void LrcnConfig::validate() const {
  if (conv_layers < 1) throw ConfigError("conv_layers must be >= 1");
  if (filters < 1) throw ConfigError("filters must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("kernel must be odd and >= 1");
  if (lstm_units.empty()) throw ConfigError("at least one LSTM layer is required");
  for (int u : lstm_units)
    if (u < 1) throw ConfigError("LSTM unit counts must be >= 1");
  if (seq_len < 1) throw ConfigError("seq_len must be >= 1");
  if (input_width < 1 || input_height < 1 || input_channels < 1) throw ConfigError("input dims must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  (void)feature_shape(input_shape(), conv_layers, filters, kernel);
}

std::string serialize(const LrcnConfig& c) {
  json j{{"conv_layers", c.conv_layers}, {"filters", c.filters},         {"kernel", c.kernel},
         {"lstm_units", c.lstm_units},   {"seq_len", c.seq_len},         {"input_width", c.input_width},
         {"input_height", c.input_height}, {"input_channels", c.input_channels},
         {"dropout", c.dropout},         {"conv_frozen", c.conv_frozen}};
  return j.dump();
}

LrcnConfig parse_lrcn_config(const std::string& text) {
  try {
    const json j = json::parse(text);
    LrcnConfig c;
    c.conv_layers = j.at("conv_layers").get<int>();
    c.filters = j.at("filters").get<int>();
    c.kernel = j.at("kernel").get<int>();
    c.lstm_units = j.at("lstm_units").get<std::vector<int>>();
    c.seq_len = j.at("seq_len").get<int>();
    c.input_width = j.at("input_width").get<int>();
    c.input_height = j.at("input_height").get<int>();
    c.input_channels = j.value("input_channels", 4);
    c.dropout = j.value("dropout", 0.3);
    c.conv_frozen = j.value("conv_frozen", false);
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad LRCN config: ") + e.what());
  }
}

std::int64_t count_trainable_params(const LrcnConfig& config) {
  config.validate();
  const FeatureShape fs = feature_shape(config.input_shape(), config.conv_layers, config.filters, config.kernel);
  std::int64_t total = 0;
  if (!config.conv_frozen) {
    int ch = config.input_channels;
    for (int c = 0; c < config.conv_layers; ++c) {
      total += conv_param_count(ch, config.filters, config.kernel);
      ch = config.filters;
    }
  }
  std::int64_t in = static_cast<std::int64_t>(fs.flattened());
  for (int u : config.lstm_units) {
    total += 4 * ((in + u) * u + u);
    in = u;
  }
  return total + in + 1;
}

std::int64_t round_count(double raw) {
  if (!std::isfinite(raw) || raw <= 0.0) return 0;
  return static_cast<std::int64_t>(std::llround(raw));
}

template <typename Real>
LrcnModel<Real> LrcnModel<Real>::build(const LrcnConfig& config, std::uint64_t seed) {
  config.validate();
  LrcnModel m;
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
  for (int l = 0; l < config.lstm_layers(); ++l) {
    const int U = config.lstm_units[l];
    const std::string p = "lstm" + std::to_string(l);
    auto k = make_group<Real>(p + ".kernel", {4 * U, in});
    glorot_uniform<Real>(k.values, in, 4 * U, rng);
    auto r = make_group<Real>(p + ".recurrent", {4 * U, U});
    glorot_uniform<Real>(r.values, U, 4 * U, rng);
    auto b = make_group<Real>(p + ".bias", {4 * U});
    std::fill(b.values.begin() + U, b.values.begin() + 2 * U, Real(1));
    m.params_.push_back(std::move(k));
    m.params_.push_back(std::move(r));
    m.params_.push_back(std::move(b));
    in = U;
  }
  auto w = make_group<Real>("output.weight", {1, in});
  glorot_uniform<Real>(w.values, in, 1, rng);
  m.params_.push_back(std::move(w));
  m.params_.push_back(make_group<Real>("output.bias", {1}));
  m.set_conv_frozen(config.conv_frozen);
  return m;
}

template <typename Real>
LrcnModel<Real> LrcnModel<Real>::from_params(const LrcnConfig& config, std::vector<ParamGroup<Real>> params) {
  LrcnModel m = build(config, 0);
  if (params.size() != m.params_.size()) throw ShapeError("parameter group count does not match the config");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape != m.params_[i].shape || params[i].values.size() != m.params_[i].values.size()) {
      throw ShapeError("parameter group '" + params[i].name + "' has the wrong shape");
    }
    m.params_[i].values = std::move(params[i].values);
  }
  return m;
}

template <typename Real>
void LrcnModel<Real>::check_frames(FrameSpan<Real> frames) const {
  if (static_cast<int>(frames.size()) != config_.seq_len) {
    throw ShapeError("sequence has " + std::to_string(frames.size()) + " frames, model expects " +
                     std::to_string(config_.seq_len));
  }
  for (const auto* f : frames)
    if (f == nullptr || f->shape != config_.input_shape()) throw ShapeError("frame shape does not match the model input");
}

template <typename Real>
std::span<const ParamGroup<Real>> LrcnModel<Real>::conv_groups() const {
  return {params_.data(), static_cast<std::size_t>(2 * config_.conv_layers)};
}

template <typename Real>
std::span<const ParamGroup<Real>> LrcnModel<Real>::lstm_groups(int layer) const {
  return {params_.data() + 2 * config_.conv_layers + 3 * layer, 3};
}

template <typename Real>
int LrcnModel<Real>::lstm_input(int layer) const {
  return layer == 0 ? static_cast<int>(shape_.flattened()) : config_.lstm_units[layer - 1];
}

template <typename Real>
std::vector<Real> LrcnModel<Real>::frame_features(const Tensor3<Real>& frame) const {
  return conv_forward<Real>(shape_, conv_groups(), frame, nullptr);
}

template <typename Real>
std::vector<Real> LrcnModel<Real>::frame_features(const Tensor3<Real>& frame, ConvTrace<Real>* trace) const {
  if (frame.shape != config_.input_shape()) throw ShapeError("frame shape does not match the model input");
  return conv_forward<Real>(shape_, conv_groups(), frame, trace);
}

template <typename Real>
bool LrcnModel<Real>::conv_trainable() const {
  for (const auto& g : conv_groups())
    if (g.trainable) return true;
  return false;
}

template <typename Real>
Real LrcnModel<Real>::head_forward(std::span<const std::vector<Real>* const> features, Trace& trace,
                                   Rng* dropout_rng) const {
  const int T = config_.seq_len;
  if (static_cast<int>(features.size()) != T) throw ShapeError("feature sequence length does not match seq_len");
  const std::size_t flat = shape_.flattened();
  std::vector<Real> x(static_cast<std::size_t>(T) * flat);
  for (int t = 0; t < T; ++t) {
    if (features[t]->size() != flat) throw ShapeError("cached features have the wrong length");
    std::copy(features[t]->begin(), features[t]->end(), x.begin() + static_cast<std::ptrdiff_t>(t * flat));
  }
  trace.lstm.assign(static_cast<std::size_t>(config_.lstm_layers()), {});
  for (int l = 0; l < config_.lstm_layers(); ++l) {
    x = lstm_forward<Real>(lstm_groups(l), lstm_input(l), config_.lstm_units[l], std::move(x), T,
                           config_.dropout, dropout_rng, &trace.lstm[l]);
  }
  const int U = config_.lstm_units.back();
  trace.last.assign(x.end() - U, x.end());
  const auto& w = params_[params_.size() - 2].values;
  Real y = params_.back().values[0];
  for (int u = 0; u < U; ++u) y += w[u] * trace.last[u];
  return y;
}

template <typename Real>
void LrcnModel<Real>::head_backward(const Trace& trace, Real dy, Gradients<Real>& grads,
                                    std::vector<std::vector<Real>>* dfeatures) const {
  const int T = config_.seq_len;
  const int L = config_.lstm_layers();
  const std::size_t n = params_.size();
  const int U = config_.lstm_units.back();
  const auto& w = params_[n - 2];
  if (w.trainable)
    for (int u = 0; u < U; ++u) grads[n - 2][u] += dy * trace.last[u];
  if (params_[n - 1].trainable) grads[n - 1][0] += dy;

  std::vector<Real> dout(static_cast<std::size_t>(T) * U, Real(0));
  for (int u = 0; u < U; ++u) dout[static_cast<std::size_t>(T - 1) * U + u] = dy * w.values[u];
  for (int l = L - 1; l >= 0; --l) {
    const int n_in = lstm_input(l);
    std::vector<Real> dx;
    if (l > 0 || dfeatures) dx.assign(static_cast<std::size_t>(T) * n_in, Real(0));
    const std::size_t g0 = static_cast<std::size_t>(2 * config_.conv_layers + 3 * l);
    lstm_backward<Real>(lstm_groups(l), n_in, config_.lstm_units[l], trace.lstm[l], dout,
                        std::span<std::vector<Real>>(grads.data() + g0, 3), dx);
    dout = std::move(dx);
  }
  if (!dfeatures) return;
  const std::size_t flat = shape_.flattened();
  dfeatures->assign(static_cast<std::size_t>(T), {});
  for (int t = 0; t < T; ++t)
    (*dfeatures)[t].assign(dout.begin() + static_cast<std::ptrdiff_t>(t * flat),
                           dout.begin() + static_cast<std::ptrdiff_t>((t + 1) * flat));
}

template <typename Real>
Real LrcnModel<Real>::forward_features(std::span<const std::vector<Real>* const> features) const {
  Trace trace;
  return head_forward(features, trace, nullptr);
}

template <typename Real>
Real LrcnModel<Real>::forward(FrameSpan<Real> frames, Mode mode, Rng* rng) const {
  check_frames(frames);
  if (mode == Mode::train) {
    if (rng == nullptr) throw ConfigError("train-mode forward needs a dropout RNG");
    Trace trace;
    return forward_trace(frames, trace, rng);
  }
  std::vector<std::vector<Real>> feats;
  feats.reserve(frames.size());
  for (const auto* f : frames) feats.push_back(frame_features(*f));
  std::vector<const std::vector<Real>*> ptrs;
  for (const auto& f : feats) ptrs.push_back(&f);
  return forward_features(ptrs);
}

template <typename Real>
Real LrcnModel<Real>::forward_trace(FrameSpan<Real> frames, Trace& trace, Rng* dropout_rng) const {
  check_frames(frames);
  const int T = config_.seq_len;
  trace.conv.assign(static_cast<std::size_t>(T), {});
  std::vector<std::vector<Real>> feats(static_cast<std::size_t>(T));
  std::vector<const std::vector<Real>*> ptrs;
  for (int t = 0; t < T; ++t) {
    feats[t] = conv_forward<Real>(shape_, conv_groups(), *frames[t], &trace.conv[t]);
    ptrs.push_back(&feats[t]);
  }
  return head_forward(ptrs, trace, dropout_rng);
}

template <typename Real>
void LrcnModel<Real>::backward(FrameSpan<Real> frames, const Trace& trace, Real dy,
                               Gradients<Real>& grads, std::vector<Tensor3<Real>>* input_grads) const {
  const bool need_conv = conv_trainable() || input_grads != nullptr;
  std::vector<std::vector<Real>> dfeat;
  head_backward(trace, dy, grads, need_conv ? &dfeat : nullptr);
  if (!need_conv) return;
  const int T = config_.seq_len;
  if (input_grads) input_grads->assign(static_cast<std::size_t>(T), {});
  for (int t = 0; t < T; ++t) {
    conv_backward<Real>(shape_, conv_groups(), *frames[t], trace.conv[t], dfeat[t],
                        std::span<std::vector<Real>>(grads.data(), 2 * config_.conv_layers),
                        input_grads ? &(*input_grads)[t] : nullptr);
  }
}

template <typename Real>
std::int64_t LrcnModel<Real>::count_params() const {
  std::int64_t n = 0;
  for (const auto& g : params_) n += static_cast<std::int64_t>(g.size());
  return n;
}

template <typename Real>
std::int64_t LrcnModel<Real>::count_trainable_params() const {
  std::int64_t n = 0;
  for (const auto& g : params_)
    if (g.trainable) n += static_cast<std::int64_t>(g.size());
  return n;
}

template <typename Real>
ConvWeights<Real> LrcnModel<Real>::conv_weights() const {
  ConvWeights<Real> cw;
  cw.input = config_.input_shape();
  cw.conv_layers = config_.conv_layers;
  cw.filters = config_.filters;
  cw.kernel = config_.kernel;
  cw.groups.assign(params_.begin(), params_.begin() + 2 * config_.conv_layers);
  return cw;
}

template <typename Real>
void LrcnModel<Real>::transfer_conv_weights(const ConvWeights<Real>& source) {
  if (source.conv_layers != config_.conv_layers || source.filters != config_.filters ||
      source.kernel != config_.kernel || source.input.channels != config_.input_channels ||
      source.groups.size() != static_cast<std::size_t>(2 * config_.conv_layers)) {
    throw ShapeError("source conv blocks do not match the target configuration");
  }
  for (std::size_t i = 0; i < source.groups.size(); ++i) {
    if (source.groups[i].shape != params_[i].shape) {
      throw ShapeError("conv group '" + params_[i].name + "' shape mismatch");
    }
  }
  for (std::size_t i = 0; i < source.groups.size(); ++i) params_[i].values = source.groups[i].values;
  set_conv_frozen(true);
}

template <typename Real>
void LrcnModel<Real>::set_fine_tune() {
  for (auto& g : params_) g.trainable = true;
  config_.conv_frozen = false;
}

template <typename Real>
void LrcnModel<Real>::set_conv_frozen(bool frozen) {
  config_.conv_frozen = frozen;
  for (int i = 0; i < 2 * config_.conv_layers; ++i) params_[i].trainable = !frozen;
}

template class LrcnModel<float>;
template class LrcnModel<double>;

}  // namespace pcount
