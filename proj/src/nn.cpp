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
#include "pcount/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcount/errors.hpp"
#include "pcount/kernels.hpp"

namespace pcount {

template <typename Real>
Gradients<Real> zero_gradients(const std::vector<ParamGroup<Real>>& params) {
  Gradients<Real> g;
  g.reserve(params.size());
  for (const auto& p : params) g.emplace_back(p.size(), Real(0));
  return g;
}

template <typename Real>
ParamGroup<Real> make_group(std::string name, std::vector<int> shape) {
  ParamGroup<Real> g;
  g.name = std::move(name);
  g.shape = std::move(shape);
  const std::size_t n = std::accumulate(g.shape.begin(), g.shape.end(), std::size_t{1},
                                        [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
  g.values.assign(n, Real(0));
  return g;
}

template <typename Real>
void glorot_uniform(std::span<Real> values, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : values) v = static_cast<Real>(dist(rng));
}

FeatureShape feature_shape(Shape3 input, int conv_layers, int filters, int kernel) {
  if (conv_layers < 1 || filters < 1 || kernel < 1) throw ConfigError("conv blocks need C, F, K >= 1");
  FeatureShape fs;
  fs.input = input;
  fs.kernel = kernel;
  Shape3 cur = input;
  for (int c = 0; c < conv_layers; ++c) {
    Shape3 conv{filters, cur.height - kernel + 1, cur.width - kernel + 1};
    Shape3 pooled{filters, conv.height / 2, conv.width / 2};
    if (conv.height < 1 || conv.width < 1 || pooled.height < 1 || pooled.width < 1) {
      throw ConfigError("conv block " + std::to_string(c + 1) + " collapses a " +
                        std::to_string(cur.height) + "x" + std::to_string(cur.width) +
                        " input with kernel " + std::to_string(kernel));
    }
    fs.conv.push_back(conv);
    fs.pooled.push_back(pooled);
    cur = pooled;
  }
  return fs;
}

std::int64_t conv_param_count(int in_channels, int filters, int kernel) {
  return (static_cast<std::int64_t>(in_channels) * kernel * kernel + 1) * filters;
}

template <typename Real>
std::vector<Real> conv_forward(const FeatureShape& shape, std::span<const ParamGroup<Real>> params,
                               const Tensor3<Real>& frame, ConvTrace<Real>* trace) {
  if (frame.shape != shape.input) throw ShapeError("frame shape does not match the conv input");
  const std::size_t blocks = shape.conv.size();
  if (trace) {
    trace->pre.resize(blocks);
    trace->pooled.resize(blocks);
    trace->argmax.resize(blocks);
  }
  std::vector<Real> input_buf;
  std::span<const Real> input = frame.data;
  Shape3 in_shape = shape.input;
  std::vector<Real> pre, pooled;
  std::vector<std::int32_t> argmax;
  for (std::size_t b = 0; b < blocks; ++b) {
    const Shape3 cs = shape.conv[b];
    const Shape3 ps = shape.pooled[b];
    pre.assign(cs.size(), Real(0));
    pooled.assign(ps.size(), Real(0));
    argmax.assign(ps.size(), 0);
    kernels::conv2d_valid<Real>(input, in_shape, params[2 * b].values, params[2 * b + 1].values,
                                cs.channels, shape.kernel, pre);
    kernels::relu_maxpool2x2<Real>(pre, cs, pooled, argmax);
    if (trace) {
      trace->pre[b] = pre;
      trace->pooled[b] = pooled;
      trace->argmax[b] = argmax;
    }
    input_buf.swap(pooled);
    input = input_buf;
    in_shape = ps;
  }
  return input_buf;
}

template <typename Real>
void conv_backward(const FeatureShape& shape, std::span<const ParamGroup<Real>> params,
                   const Tensor3<Real>& frame, const ConvTrace<Real>& trace,
                   std::span<const Real> dfeatures, std::span<std::vector<Real>> grads,
                   Tensor3<Real>* dinput) {
  const int blocks = static_cast<int>(shape.conv.size());
  // Deepest block that still needs a gradient flowing into it.
  int lowest = blocks;
  for (int b = 0; b < blocks; ++b) {
    if (params[2 * b].trainable || params[2 * b + 1].trainable) {
      lowest = b;
      break;
    }
  }
  if (dinput) lowest = 0;
  if (lowest == blocks) return;

  std::vector<Real> dout(dfeatures.begin(), dfeatures.end());
  for (int b = blocks - 1; b >= lowest; --b) {
    const Shape3 cs = shape.conv[b];
    const Shape3 in_shape = b == 0 ? shape.input : shape.pooled[b - 1];
    std::span<const Real> in = b == 0 ? std::span<const Real>(frame.data)
                                      : std::span<const Real>(trace.pooled[b - 1]);
    std::vector<Real> dpre(cs.size(), Real(0));
    kernels::relu_maxpool2x2_backward<Real>(trace.pre[b], dout, trace.argmax[b], dpre);
    if (params[2 * b].trainable || params[2 * b + 1].trainable) {
      kernels::conv2d_backward_params<Real>(in, in_shape, dpre, cs.channels, shape.kernel,
                                            grads[2 * b], grads[2 * b + 1]);
    }
    if (b > lowest || (b == 0 && dinput)) {
      std::vector<Real> din(in_shape.size(), Real(0));
      kernels::conv2d_backward_input<Real>(params[2 * b].values, in_shape, dpre, cs.channels,
                                           shape.kernel, din);
      if (b == 0) {
        dinput->shape = in_shape;
        dinput->data = std::move(din);
      } else {
        dout = std::move(din);
      }
    }
  }
}

namespace {

template <typename Real>
inline Real sigmoid(Real z) {
  return Real(1) / (Real(1) + std::exp(-z));
}

}  // namespace

template <typename Real>
std::vector<Real> lstm_forward(std::span<const ParamGroup<Real>> params, int n_in, int units,
                               std::vector<Real> x, int steps, double dropout, Rng* dropout_rng,
                               LstmTrace<Real>* trace) {
  const int U = units, G = 4 * units;
  const auto& W = params[0].values;
  const auto& R = params[1].values;
  const auto& bias = params[2].values;
  if (x.size() != static_cast<std::size_t>(steps) * n_in) throw ShapeError("LSTM input has the wrong length");

  std::vector<Real> z(static_cast<std::size_t>(steps) * G, Real(0));
  for (int t = 0; t < steps; ++t) std::copy(bias.begin(), bias.end(), z.begin() + static_cast<std::ptrdiff_t>(t) * G);
  kernels::matmul_rows<Real>(W, G, n_in, x, steps, z);

  std::vector<Real> c(static_cast<std::size_t>(steps) * U), tc(c.size()), h(c.size());
  std::vector<Real> out(c.size());
  std::vector<Real> mask;
  const bool drop = dropout_rng != nullptr && dropout > 0.0;
  if (drop) {
    mask.resize(c.size());
    std::bernoulli_distribution keep(1.0 - dropout);
    const Real scale = static_cast<Real>(1.0 / (1.0 - dropout));
    for (auto& m : mask) m = keep(*dropout_rng) ? scale : Real(0);
  }

  for (int t = 0; t < steps; ++t) {
    Real* zt = z.data() + static_cast<std::size_t>(t) * G;
    if (t > 0) {
      kernels::matmul_rows<Real>(R, G, U, std::span<const Real>(h.data() + static_cast<std::size_t>(t - 1) * U, U), 1,
                                 std::span<Real>(zt, G));
    }
    for (int u = 0; u < U; ++u) {
      const Real i = sigmoid(zt[u]);
      const Real f = sigmoid(zt[U + u]);
      const Real g = std::tanh(zt[2 * U + u]);
      const Real o = sigmoid(zt[3 * U + u]);
      zt[u] = i;
      zt[U + u] = f;
      zt[2 * U + u] = g;
      zt[3 * U + u] = o;
      const Real cprev = t > 0 ? c[static_cast<std::size_t>(t - 1) * U + u] : Real(0);
      const std::size_t k = static_cast<std::size_t>(t) * U + u;
      c[k] = f * cprev + i * g;
      tc[k] = std::tanh(c[k]);
      h[k] = o * tc[k];
      out[k] = drop ? h[k] * mask[k] : h[k];
    }
  }

  if (trace) {
    trace->steps = steps;
    trace->x = std::move(x);
    trace->gates = std::move(z);
    trace->c = std::move(c);
    trace->tanh_c = std::move(tc);
    trace->h = std::move(h);
    trace->mask = std::move(mask);
  }
  return out;
}

template <typename Real>
void lstm_backward(std::span<const ParamGroup<Real>> params, int n_in, int units,
                   const LstmTrace<Real>& tr, std::span<const Real> dout,
                   std::span<std::vector<Real>> grads, std::span<Real> dx) {
  const int U = units, G = 4 * units, T = tr.steps;
  const auto& W = params[0].values;
  const auto& R = params[1].values;
  const bool need_params = params[0].trainable || params[1].trainable || params[2].trainable;

  std::vector<Real> dz(static_cast<std::size_t>(T) * G, Real(0));
  std::vector<Real> dh_next(U, Real(0)), dc_next(U, Real(0));
  for (int t = T - 1; t >= 0; --t) {
    const Real* gt = tr.gates.data() + static_cast<std::size_t>(t) * G;
    Real* dzt = dz.data() + static_cast<std::size_t>(t) * G;
    for (int u = 0; u < U; ++u) {
      const std::size_t k = static_cast<std::size_t>(t) * U + u;
      const Real i = gt[u], f = gt[U + u], g = gt[2 * U + u], o = gt[3 * U + u];
      const Real dh = (tr.mask.empty() ? dout[k] : dout[k] * tr.mask[k]) + dh_next[u];
      const Real dc = dh * o * (Real(1) - tr.tanh_c[k] * tr.tanh_c[k]) + dc_next[u];
      const Real cprev = t > 0 ? tr.c[k - U] : Real(0);
      dzt[u] = dc * g * i * (Real(1) - i);
      dzt[U + u] = dc * cprev * f * (Real(1) - f);
      dzt[2 * U + u] = dc * i * (Real(1) - g * g);
      dzt[3 * U + u] = dh * tr.tanh_c[k] * o * (Real(1) - o);
      dc_next[u] = dc * f;
    }
    std::fill(dh_next.begin(), dh_next.end(), Real(0));
    if (t > 0) {
      std::span<const Real> hprev(tr.h.data() + static_cast<std::size_t>(t - 1) * U, U);
      kernels::matmul_rows_backward<Real>(R, G, U, hprev, 1, std::span<const Real>(dzt, G),
                                          params[1].trainable ? std::span<Real>(grads[1]) : std::span<Real>(),
                                          dh_next);
    }
  }
  if (params[2].trainable) {
    for (int t = 0; t < T; ++t)
      for (int r = 0; r < G; ++r) grads[2][r] += dz[static_cast<std::size_t>(t) * G + r];
  }
  if (need_params || !dx.empty()) {
    kernels::matmul_rows_backward<Real>(W, G, n_in, tr.x, T, dz,
                                        params[0].trainable ? std::span<Real>(grads[0]) : std::span<Real>(),
                                        dx);
  }
}

#define PCOUNT_NN_INSTANTIATE(Real)                                                                  \
  template Gradients<Real> zero_gradients<Real>(const std::vector<ParamGroup<Real>>&);               \
  template ParamGroup<Real> make_group<Real>(std::string, std::vector<int>);                         \
  template void glorot_uniform<Real>(std::span<Real>, int, int, Rng&);                               \
  template std::vector<Real> conv_forward<Real>(const FeatureShape&, std::span<const ParamGroup<Real>>, \
                                                const Tensor3<Real>&, ConvTrace<Real>*);             \
  template void conv_backward<Real>(const FeatureShape&, std::span<const ParamGroup<Real>>,          \
                                    const Tensor3<Real>&, const ConvTrace<Real>&,                    \
                                    std::span<const Real>, std::span<std::vector<Real>>,             \
                                    Tensor3<Real>*);                                                 \
  template std::vector<Real> lstm_forward<Real>(std::span<const ParamGroup<Real>>, int, int,         \
                                                std::vector<Real>, int, double, Rng*,                \
                                                LstmTrace<Real>*);                                   \
  template void lstm_backward<Real>(std::span<const ParamGroup<Real>>, int, int,                     \
                                    const LstmTrace<Real>&, std::span<const Real>,                   \
                                    std::span<std::vector<Real>>, std::span<Real>);

PCOUNT_NN_INSTANTIATE(float)
PCOUNT_NN_INSTANTIATE(double)

}  // namespace pcount
