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
// Serial reference kernels against their OpenMP versions, plus end-to-end
// forward and predictor latency at the default frame size.
#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <vector>

#include "pcount/kernels.hpp"
#include "pcount/lrcn.hpp"
#include "pcount/predictor.hpp"
#include "pcount/synthetic.hpp"

namespace k = pcount::kernels;
namespace ref = pcount::kernels::reference;
using pcount::Shape3;

namespace {

constexpr int W = pcount::kFrameWidth, H = pcount::kFrameHeight;
constexpr int kLambdaC = 4, kLambda = kLambdaC * kLambdaC * kLambdaC;

template <typename T>
std::vector<T> random_vec(std::size_t n, int hi, unsigned seed = 1) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(0, hi);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(d(rng));
  return v;
}

std::vector<float> random_real(std::size_t n, unsigned seed = 2) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> d(-1.f, 1.f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

template <bool Par>
void BM_Resize(benchmark::State& st) {
  const auto src = random_vec<std::uint8_t>(1280 * 720 * 3, 255);
  std::vector<std::uint8_t> dst(static_cast<std::size_t>(W) * H * 3);
  for (auto _ : st) {
    if constexpr (Par) k::resize_bilinear(src, 1280, 720, dst, W, H);
    else ref::resize_bilinear(src, 1280, 720, dst, W, H);
    benchmark::DoNotOptimize(dst.data());
  }
}

template <bool Par>
void BM_Quantize(benchmark::State& st) {
  const auto rgb = random_vec<std::uint8_t>(static_cast<std::size_t>(W) * H * 3, 255);
  std::vector<std::uint16_t> codes(static_cast<std::size_t>(W) * H);
  for (auto _ : st) {
    if constexpr (Par) k::quantize_rgb(rgb, kLambdaC, codes);
    else ref::quantize_rgb(rgb, kLambdaC, codes);
    benchmark::DoNotOptimize(codes.data());
  }
}

// One background step: swap a frame through the histograms, then gate.
template <bool Par>
void BM_BackgroundStep(benchmark::State& st) {
  const std::size_t n = static_cast<std::size_t>(W) * H;
  std::vector<std::uint16_t> hist(n * kLambda, 0);
  const auto a = random_vec<std::uint16_t>(n, kLambda - 1, 3);
  const auto b = random_vec<std::uint16_t>(n, kLambda - 1, 4);
  for (std::size_t p = 0; p < n; ++p) hist[p * kLambda + a[p]] = 100;
  std::vector<std::uint16_t> bg(n);
  for (auto _ : st) {
    if constexpr (Par) {
      k::histogram_swap(hist, kLambda, a, b);
      k::gated_update(hist, kLambda, 80, bg);
      k::histogram_swap(hist, kLambda, b, a);
    } else {
      ref::histogram_swap(hist, kLambda, a, b);
      ref::gated_update(hist, kLambda, 80, bg);
      ref::histogram_swap(hist, kLambda, b, a);
    }
    benchmark::DoNotOptimize(bg.data());
  }
}

template <bool Par>
void BM_Foreground(benchmark::State& st) {
  const std::size_t n = static_cast<std::size_t>(W) * H;
  const auto codes = random_vec<std::uint16_t>(n, kLambda - 1, 5);
  const auto bg = random_vec<std::uint16_t>(n, kLambda - 1, 6);
  std::vector<std::uint8_t> mask(n);
  const std::array<double, 3> gw{0.299, 0.587, 0.114};
  for (auto _ : st) {
    if constexpr (Par) k::foreground_mask(codes, bg, kLambdaC, 0.1, gw, mask);
    else ref::foreground_mask(codes, bg, kLambdaC, 0.1, gw, mask);
    benchmark::DoNotOptimize(mask.data());
  }
}

// First conv block of the default network: 4 -> 8 channels, 5x5.
template <bool Par>
void BM_Conv(benchmark::State& st) {
  const Shape3 in_shape{4, H, W};
  const int f = 8, kk = 5;
  const auto in = random_real(in_shape.size());
  const auto w = random_real(static_cast<std::size_t>(f) * 4 * kk * kk, 3);
  const std::vector<float> b(f, 0.1f);
  std::vector<float> out(static_cast<std::size_t>(f) * (H - kk + 1) * (W - kk + 1));
  for (auto _ : st) {
    if constexpr (Par) k::conv2d_valid<float>(in, in_shape, w, b, f, kk, out);
    else ref::conv2d_valid<float>(in, in_shape, w, b, f, kk, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Par>
void BM_ConvBackward(benchmark::State& st) {
  const Shape3 in_shape{4, H, W};
  const int f = 8, kk = 5;
  const auto in = random_real(in_shape.size());
  const auto w = random_real(static_cast<std::size_t>(f) * 4 * kk * kk, 3);
  const auto dout = random_real(static_cast<std::size_t>(f) * (H - kk + 1) * (W - kk + 1), 4);
  std::vector<float> dw(w.size()), db(f), din(in.size());
  for (auto _ : st) {
    if constexpr (Par) {
      k::conv2d_backward_params<float>(in, in_shape, dout, f, kk, dw, db);
      k::conv2d_backward_input<float>(w, in_shape, dout, f, kk, din);
    } else {
      ref::conv2d_backward_params<float>(in, in_shape, dout, f, kk, dw, db);
      ref::conv2d_backward_input<float>(w, in_shape, dout, f, kk, din);
    }
    benchmark::DoNotOptimize(din.data());
  }
}

// LSTM input projection: 1000 gates over 8832 features for a 9-frame window.
template <bool Par>
void BM_Matmul(benchmark::State& st) {
  const int rows = 1000, cols = 8832, n = 9;
  const auto w = random_real(static_cast<std::size_t>(rows) * cols);
  const auto x = random_real(static_cast<std::size_t>(cols) * n, 7);
  std::vector<float> y(static_cast<std::size_t>(rows) * n);
  for (auto _ : st) {
    std::fill(y.begin(), y.end(), 0.f);
    if constexpr (Par) k::matmul_rows<float>(w, rows, cols, x, n, y);
    else ref::matmul_rows<float>(w, rows, cols, x, n, y);
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_FullForward(benchmark::State& st) {
  const pcount::LrcnConfig cfg;  // default network, T = 9
  const auto model = pcount::LrcnModel<float>::build(cfg, 1);
  std::vector<pcount::Tensor3<float>> frames;
  for (int t = 0; t < cfg.seq_len; ++t) {
    pcount::Tensor3<float> f(cfg.input_shape());
    f.data = random_real(f.data.size(), static_cast<unsigned>(t));
    frames.push_back(std::move(f));
  }
  std::vector<const pcount::Tensor3<float>*> ptrs;
  for (const auto& f : frames) ptrs.push_back(&f);
  for (auto _ : st) benchmark::DoNotOptimize(model.forward(ptrs));
}

// Per-prediction latency in the streaming predictor at 20 fps, stride 5.
void BM_PredictorIngest(benchmark::State& st) {
  auto model = std::make_shared<const pcount::LrcnModel<float>>(pcount::LrcnModel<float>::build({}, 1));
  pcount::PredictorConfig pc;
  pc.eta = 10;
  pcount::Predictor predictor(model, pc);
  pcount::SceneConfig scene;
  scene.frames = 1;
  const pcount::RawFrame base = pcount::SceneGenerator(scene).next().rgb;
  std::int64_t k = 0;
  auto feed = [&] {
    pcount::RawFrame f = base;
    f.timestamp_ms = k * 50;
    f.index = k++;
    return predictor.ingest(f);
  };
  while (!predictor.latest().ready) feed();
  double latency = 0;
  std::int64_t predictions = 0;
  for (auto _ : st) {
    // one stride's worth of frames yields exactly one prediction
    for (int i = 0; i < pc.stride; ++i)
      if (auto p = feed()) {
        latency += p->latency_ms;
        ++predictions;
      }
  }
  st.counters["latency_ms"] = predictions ? latency / static_cast<double>(predictions) : 0.0;
}

}  // namespace

#define PAIR(fn)                                       BENCHMARK(fn<false>)->Name(#fn "/serial")->Unit(benchmark::kMicrosecond);   BENCHMARK(fn<true>)->Name(#fn "/openmp")->Unit(benchmark::kMicrosecond)

PAIR(BM_Resize);
PAIR(BM_Quantize);
PAIR(BM_BackgroundStep);
PAIR(BM_Foreground);
PAIR(BM_Conv);
PAIR(BM_ConvBackward);
PAIR(BM_Matmul);
BENCHMARK(BM_FullForward)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictorIngest)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
