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
#include "pcount/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace pcount::kernels {

int max_threads() { return omp_get_max_threads(); }

void resize_bilinear(std::span<const std::uint8_t> src, int src_w, int src_h,
                     std::span<std::uint8_t> dst, int dst_w, int dst_h) {
  // Same arithmetic as the serial path so results are bit-identical.
  std::vector<int> x0(dst_w), x1(dst_w);
  std::vector<double> ax(dst_w);
  for (int x = 0; x < dst_w; ++x) {
    const double p = std::clamp((x + 0.5) * src_w / dst_w - 0.5, 0.0, src_w - 1.0);
    x0[x] = static_cast<int>(std::floor(p));
    x1[x] = std::min(x0[x] + 1, src_w - 1);
    ax[x] = p - x0[x];
  }

#pragma omp parallel for schedule(static)
  for (int y = 0; y < dst_h; ++y) {
    const double p = std::clamp((y + 0.5) * src_h / dst_h - 0.5, 0.0, src_h - 1.0);
    const int y0 = static_cast<int>(std::floor(p));
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double ay = p - y0;
    const std::uint8_t* r0 = src.data() + static_cast<std::size_t>(y0) * src_w * 3;
    const std::uint8_t* r1 = src.data() + static_cast<std::size_t>(y1) * src_w * 3;
    std::uint8_t* out = dst.data() + static_cast<std::size_t>(y) * dst_w * 3;
    for (int x = 0; x < dst_w; ++x) {
      const int a = x0[x] * 3;
      const int b = x1[x] * 3;
      const double wx = ax[x];
      for (int c = 0; c < 3; ++c) {
        const double v = (1 - ay) * ((1 - wx) * r0[a + c] + wx * r0[b + c]) +
                         ay * ((1 - wx) * r1[a + c] + wx * r1[b + c]);
        out[x * 3 + c] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
}

void quantize_rgb(std::span<const std::uint8_t> rgb, int lambda_c,
                  std::span<std::uint16_t> codes) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(codes.size());
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const int r = (rgb[i * 3] * lambda_c) >> 8;
    const int g = (rgb[i * 3 + 1] * lambda_c) >> 8;
    const int b = (rgb[i * 3 + 2] * lambda_c) >> 8;
    codes[i] = static_cast<std::uint16_t>((r * lambda_c + g) * lambda_c + b);
  }
}

void histogram_swap(std::span<std::uint16_t> hist, int lambda,
                    std::span<const std::uint16_t> removed,
                    std::span<const std::uint16_t> added) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(added.size());
  const bool remove = !removed.empty();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    std::uint16_t* h = hist.data() + p * lambda;
    if (remove) --h[removed[p]];
    ++h[added[p]];
  }
}

namespace {

inline int argmax_bin(const std::uint16_t* h, int lambda, int& best_count) {
  int best = 0;
  best_count = h[0];
  for (int l = 1; l < lambda; ++l) {
    if (h[l] > best_count) {
      best_count = h[l];
      best = l;
    }
  }
  return best;
}

}  // namespace

void histogram_mode(std::span<const std::uint16_t> hist, int lambda,
                    std::span<std::uint16_t> background) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(background.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    int count = 0;
    background[p] = static_cast<std::uint16_t>(argmax_bin(hist.data() + p * lambda, lambda, count));
  }
}

void gated_update(std::span<const std::uint16_t> hist, int lambda, int min_count,
                  std::span<std::uint16_t> background) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(background.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    const std::uint16_t* h = hist.data() + p * lambda;
    // Fast path: the current background bin already holds the gate.
    if (h[background[p]] >= min_count) {
      int count = 0;
      background[p] = static_cast<std::uint16_t>(argmax_bin(h, lambda, count));
      continue;
    }
    int count = 0;
    const int mode = argmax_bin(h, lambda, count);
    if (count >= min_count) background[p] = static_cast<std::uint16_t>(mode);
  }
}

void foreground_mask(std::span<const std::uint16_t> codes,
                     std::span<const std::uint16_t> background, int lambda_c,
                     double beta, const std::array<double, 3>& gw,
                     std::span<std::uint8_t> mask) {
  const double scale = lambda_c - 1;
  const int lc2 = lambda_c * lambda_c;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(codes.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    const int a = codes[p];
    const int b = background[p];
    if (a == b) {
      mask[p] = 0;
      continue;
    }
    const double dr = std::abs((a / lc2) / scale - (b / lc2) / scale);
    const double dg = std::abs(((a / lambda_c) % lambda_c) / scale - ((b / lambda_c) % lambda_c) / scale);
    const double db = std::abs((a % lambda_c) / scale - (b % lambda_c) / scale);
    mask[p] = (gw[0] * dr + gw[1] * dg + gw[2] * db) > beta ? 1 : 0;
  }
}

template <typename Real>
void conv2d_valid(std::span<const Real> in, Shape3 in_shape, std::span<const Real> weights,
                  std::span<const Real> bias, int filters, int kernel, std::span<Real> out) {
  const int C = in_shape.channels, H = in_shape.height, W = in_shape.width;
  const int Ho = H - kernel + 1, Wo = W - kernel + 1;
  const Real* src = in.data();
  const Real* wts = weights.data();
  Real* dst = out.data();
  // Four filters share every input load.
  constexpr int kBlock = 4;
  const int blocks = (filters + kBlock - 1) / kBlock;
  const std::size_t wstride = static_cast<std::size_t>(C) * kernel * kernel;

#pragma omp parallel for collapse(2) schedule(static)
  for (int fb = 0; fb < blocks; ++fb) {
    for (int y = 0; y < Ho; ++y) {
      const int f0 = fb * kBlock;
      const int nf = std::min(kBlock, filters - f0);
      Real* orow[kBlock];
      for (int j = 0; j < kBlock; ++j) {
        const int f = f0 + std::min(j, nf - 1);
        orow[j] = dst + (static_cast<std::size_t>(f) * Ho + y) * Wo;
      }
      for (int j = 0; j < nf; ++j) std::fill(orow[j], orow[j] + Wo, bias[f0 + j]);
      if (nf < kBlock) {
        for (int j = 0; j < nf; ++j) {
          for (int c = 0; c < C; ++c)
            for (int ky = 0; ky < kernel; ++ky) {
              const Real* irow = src + (static_cast<std::size_t>(c) * H + y + ky) * W;
              const Real* wk = wts + (f0 + j) * wstride + (static_cast<std::size_t>(c) * kernel + ky) * kernel;
#pragma omp simd
              for (int x = 0; x < Wo; ++x) {
                Real acc = orow[j][x];
                for (int kx = 0; kx < kernel; ++kx) acc += wk[kx] * irow[x + kx];
                orow[j][x] = acc;
              }
            }
        }
        continue;
      }
      Real* o0 = orow[0];
      Real* o1 = orow[1];
      Real* o2 = orow[2];
      Real* o3 = orow[3];
      for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < kernel; ++ky) {
          const Real* irow = src + (static_cast<std::size_t>(c) * H + y + ky) * W;
          const std::size_t off = (static_cast<std::size_t>(c) * kernel + ky) * kernel;
          const Real* w0 = wts + f0 * wstride + off;
          const Real* w1 = w0 + wstride;
          const Real* w2 = w1 + wstride;
          const Real* w3 = w2 + wstride;
#pragma omp simd
          for (int x = 0; x < Wo; ++x) {
            Real a0 = o0[x], a1 = o1[x], a2 = o2[x], a3 = o3[x];
            for (int kx = 0; kx < kernel; ++kx) {
              const Real v = irow[x + kx];
              a0 += w0[kx] * v;
              a1 += w1[kx] * v;
              a2 += w2[kx] * v;
              a3 += w3[kx] * v;
            }
            o0[x] = a0;
            o1[x] = a1;
            o2[x] = a2;
            o3[x] = a3;
          }
        }
      }
    }
  }
}

template <typename Real>
void conv2d_backward_params(std::span<const Real> in, Shape3 in_shape, std::span<const Real> dout,
                            int filters, int kernel, std::span<Real> dweights,
                            std::span<Real> dbias) {
  const int C = in_shape.channels, H = in_shape.height, W = in_shape.width;
  const int Ho = H - kernel + 1, Wo = W - kernel + 1;
  const Real* src = in.data();
  const Real* g = dout.data();

#pragma omp parallel for schedule(static)
  for (int f = 0; f < filters; ++f) {
    const Real* gf = g + static_cast<std::size_t>(f) * Ho * Wo;
    Real bsum = 0;
    for (int i = 0; i < Ho * Wo; ++i) bsum += gf[i];
    dbias[f] += bsum;
    for (int c = 0; c < C; ++c) {
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          Real acc = 0;
          for (int y = 0; y < Ho; ++y) {
            const Real* grow = gf + static_cast<std::size_t>(y) * Wo;
            const Real* irow = src + (static_cast<std::size_t>(c) * H + y + ky) * W + kx;
#pragma omp simd reduction(+ : acc)
            for (int x = 0; x < Wo; ++x) acc += grow[x] * irow[x];
          }
          dweights[((static_cast<std::size_t>(f) * C + c) * kernel + ky) * kernel + kx] += acc;
        }
      }
    }
  }
}

template <typename Real>
void conv2d_backward_input(std::span<const Real> weights, Shape3 in_shape,
                           std::span<const Real> dout, int filters, int kernel,
                           std::span<Real> din) {
  const int C = in_shape.channels, H = in_shape.height, W = in_shape.width;
  const int Ho = H - kernel + 1, Wo = W - kernel + 1;

#pragma omp parallel for schedule(static)
  for (int c = 0; c < C; ++c) {
    for (int f = 0; f < filters; ++f) {
      const Real* gf = dout.data() + static_cast<std::size_t>(f) * Ho * Wo;
      for (int ky = 0; ky < kernel; ++ky) {
        for (int kx = 0; kx < kernel; ++kx) {
          const Real w = weights[((static_cast<std::size_t>(f) * C + c) * kernel + ky) * kernel + kx];
          for (int y = 0; y < Ho; ++y) {
            const Real* grow = gf + static_cast<std::size_t>(y) * Wo;
            Real* drow = din.data() + (static_cast<std::size_t>(c) * H + y + ky) * W + kx;
#pragma omp simd
            for (int x = 0; x < Wo; ++x) drow[x] += w * grow[x];
          }
        }
      }
    }
  }
}

template <typename Real>
void relu_maxpool2x2(std::span<const Real> pre, Shape3 pre_shape, std::span<Real> out,
                     std::span<std::int32_t> argmax) {
  const int C = pre_shape.channels, H = pre_shape.height, W = pre_shape.width;
  const int Hp = H / 2, Wp = W / 2;

#pragma omp parallel for collapse(2) schedule(static)
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < Hp; ++y) {
      for (int x = 0; x < Wp; ++x) {
        const std::int32_t base = static_cast<std::int32_t>((static_cast<std::size_t>(c) * H + 2 * y) * W + 2 * x);
        std::int32_t best = base;
        Real v = pre[base];
        const std::int32_t cand[3] = {base + 1, base + W, base + W + 1};
        for (std::int32_t i : cand) {
          if (pre[i] > v) {
            v = pre[i];
            best = i;
          }
        }
        const std::size_t o = (static_cast<std::size_t>(c) * Hp + y) * Wp + x;
        out[o] = v > Real(0) ? v : Real(0);
        argmax[o] = best;
      }
    }
  }
}

template <typename Real>
void relu_maxpool2x2_backward(std::span<const Real> pre, std::span<const Real> dout,
                              std::span<const std::int32_t> argmax, std::span<Real> dpre) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(dout.size());
  // Pool windows are disjoint, so each argmax target is written at most once.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::int32_t j = argmax[i];
    if (pre[j] > Real(0)) dpre[j] += dout[i];
  }
}

template <typename Real>
void matmul_rows(std::span<const Real> w, int rows, int cols, std::span<const Real> x, int n,
                 std::span<Real> y) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const Real* wr = w.data() + static_cast<std::size_t>(r) * cols;
    for (int t = 0; t < n; ++t) {
      const Real* xt = x.data() + static_cast<std::size_t>(t) * cols;
      Real acc = 0;
#pragma omp simd reduction(+ : acc)
      for (int k = 0; k < cols; ++k) acc += wr[k] * xt[k];
      y[static_cast<std::size_t>(t) * rows + r] += acc;
    }
  }
}

template <typename Real>
void matmul_rows_backward(std::span<const Real> w, int rows, int cols, std::span<const Real> x,
                          int n, std::span<const Real> dy, std::span<Real> dw,
                          std::span<Real> dx) {
  if (!dw.empty()) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
      Real* dwr = dw.data() + static_cast<std::size_t>(r) * cols;
      for (int t = 0; t < n; ++t) {
        const Real a = dy[static_cast<std::size_t>(t) * rows + r];
        if (a == Real(0)) continue;
        const Real* xt = x.data() + static_cast<std::size_t>(t) * cols;
#pragma omp simd
        for (int k = 0; k < cols; ++k) dwr[k] += a * xt[k];
      }
    }
  }
  if (!dx.empty()) {
    constexpr int kChunk = 512;
    const int chunks = (cols + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < chunks; ++ch) {
      const int k0 = ch * kChunk;
      const int k1 = std::min(cols, k0 + kChunk);
      for (int r = 0; r < rows; ++r) {
        const Real* wr = w.data() + static_cast<std::size_t>(r) * cols;
        for (int t = 0; t < n; ++t) {
          const Real a = dy[static_cast<std::size_t>(t) * rows + r];
          if (a == Real(0)) continue;
          Real* dxt = dx.data() + static_cast<std::size_t>(t) * cols;
#pragma omp simd
          for (int k = k0; k < k1; ++k) dxt[k] += a * wr[k];
        }
      }
    }
  }
}

#define PCOUNT_INSTANTIATE(Real)                                                                   \
  template void conv2d_valid<Real>(std::span<const Real>, Shape3, std::span<const Real>,           \
                                   std::span<const Real>, int, int, std::span<Real>);              \
  template void conv2d_backward_params<Real>(std::span<const Real>, Shape3, std::span<const Real>, \
                                             int, int, std::span<Real>, std::span<Real>);          \
  template void conv2d_backward_input<Real>(std::span<const Real>, Shape3, std::span<const Real>,  \
                                            int, int, std::span<Real>);                            \
  template void relu_maxpool2x2<Real>(std::span<const Real>, Shape3, std::span<Real>,              \
                                      std::span<std::int32_t>);                                    \
  template void relu_maxpool2x2_backward<Real>(std::span<const Real>, std::span<const Real>,       \
                                               std::span<const std::int32_t>, std::span<Real>);    \
  template void matmul_rows<Real>(std::span<const Real>, int, int, std::span<const Real>, int,     \
                                  std::span<Real>);                                                \
  template void matmul_rows_backward<Real>(std::span<const Real>, int, int, std::span<const Real>, \
                                           int, std::span<const Real>, std::span<Real>,            \
                                           std::span<Real>);

PCOUNT_INSTANTIATE(float)
PCOUNT_INSTANTIATE(double)

}  // namespace pcount::kernels
