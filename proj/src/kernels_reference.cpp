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
#include <algorithm>
#include <array>
#include <cmath>

#include "pcount/frame.hpp"
#include "pcount/kernels.hpp"

namespace pcount::kernels::reference {

void resize_bilinear(std::span<const std::uint8_t> src, int src_w, int src_h,
                     std::span<std::uint8_t> dst, int dst_w, int dst_h) {
  for (int y = 0; y < dst_h; ++y) {
    for (int x = 0; x < dst_w; ++x) {
      double sx = std::clamp((x + 0.5) * src_w / dst_w - 0.5, 0.0, src_w - 1.0);
      double sy = std::clamp((y + 0.5) * src_h / dst_h - 0.5, 0.0, src_h - 1.0);
      int x0 = static_cast<int>(std::floor(sx));
      int y0 = static_cast<int>(std::floor(sy));
      int x1 = std::min(x0 + 1, src_w - 1);
      int y1 = std::min(y0 + 1, src_h - 1);
      double ax = sx - x0, ay = sy - y0;
      for (int c = 0; c < 3; ++c) {
        auto at = [&](int xx, int yy) {
          return static_cast<double>(src[(static_cast<std::size_t>(yy) * src_w + xx) * 3 + c]);
        };
        double v = (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x1, y0)) +
                   ay * ((1 - ax) * at(x0, y1) + ax * at(x1, y1));
        dst[(static_cast<std::size_t>(y) * dst_w + x) * 3 + c] =
            static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
}

void quantize_rgb(std::span<const std::uint8_t> rgb, int lambda_c,
                  std::span<std::uint16_t> codes) {
  for (std::size_t i = 0; i < codes.size(); ++i) {
    codes[i] = quantize_pixel(rgb[i * 3], rgb[i * 3 + 1], rgb[i * 3 + 2], lambda_c);
  }
}

void histogram_swap(std::span<std::uint16_t> hist, int lambda,
                    std::span<const std::uint16_t> removed,
                    std::span<const std::uint16_t> added) {
  for (std::size_t p = 0; p < removed.size(); ++p) --hist[p * lambda + removed[p]];
  for (std::size_t p = 0; p < added.size(); ++p) ++hist[p * lambda + added[p]];
}

void histogram_mode(std::span<const std::uint16_t> hist, int lambda,
                    std::span<std::uint16_t> background) {
  for (std::size_t p = 0; p < background.size(); ++p) {
    auto first = hist.begin() + static_cast<std::ptrdiff_t>(p * lambda);
    background[p] = static_cast<std::uint16_t>(std::max_element(first, first + lambda) - first);
  }
}

void gated_update(std::span<const std::uint16_t> hist, int lambda, int min_count,
                  std::span<std::uint16_t> background) {
  for (std::size_t p = 0; p < background.size(); ++p) {
    auto first = hist.begin() + static_cast<std::ptrdiff_t>(p * lambda);
    auto top = std::max_element(first, first + lambda);
    if (*top >= min_count) background[p] = static_cast<std::uint16_t>(top - first);
  }
}

void foreground_mask(std::span<const std::uint16_t> codes,
                     std::span<const std::uint16_t> background, int lambda_c,
                     double beta, const std::array<double, 3>& gw,
                     std::span<std::uint8_t> mask) {
  for (std::size_t p = 0; p < codes.size(); ++p) {
    const auto a = dequantize_code(codes[p], lambda_c);
    const auto b = dequantize_code(background[p], lambda_c);
    const double gray = gw[0] * std::abs(a[0] - b[0]) + gw[1] * std::abs(a[1] - b[1]) +
                        gw[2] * std::abs(a[2] - b[2]);
    mask[p] = gray > beta ? 1 : 0;
  }
}

template <typename Real>
void conv2d_valid(std::span<const Real> in, Shape3 s, std::span<const Real> weights,
                  std::span<const Real> bias, int filters, int k, std::span<Real> out) {
  const int Ho = s.height - k + 1, Wo = s.width - k + 1;
  for (int f = 0; f < filters; ++f)
    for (int y = 0; y < Ho; ++y)
      for (int x = 0; x < Wo; ++x) {
        Real acc = bias[f];
        for (int c = 0; c < s.channels; ++c)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
              acc += weights[((f * s.channels + c) * k + ky) * k + kx] *
                     in[(static_cast<std::size_t>(c) * s.height + y + ky) * s.width + x + kx];
        out[(static_cast<std::size_t>(f) * Ho + y) * Wo + x] = acc;
      }
}

template <typename Real>
void conv2d_backward_params(std::span<const Real> in, Shape3 s, std::span<const Real> dout,
                            int filters, int k, std::span<Real> dweights, std::span<Real> dbias) {
  const int Ho = s.height - k + 1, Wo = s.width - k + 1;
  for (int f = 0; f < filters; ++f)
    for (int y = 0; y < Ho; ++y)
      for (int x = 0; x < Wo; ++x) {
        const Real g = dout[(static_cast<std::size_t>(f) * Ho + y) * Wo + x];
        dbias[f] += g;
        for (int c = 0; c < s.channels; ++c)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
              dweights[((f * s.channels + c) * k + ky) * k + kx] +=
                  g * in[(static_cast<std::size_t>(c) * s.height + y + ky) * s.width + x + kx];
      }
}

template <typename Real>
void conv2d_backward_input(std::span<const Real> weights, Shape3 s, std::span<const Real> dout,
                           int filters, int k, std::span<Real> din) {
  const int Ho = s.height - k + 1, Wo = s.width - k + 1;
  for (int f = 0; f < filters; ++f)
    for (int y = 0; y < Ho; ++y)
      for (int x = 0; x < Wo; ++x) {
        const Real g = dout[(static_cast<std::size_t>(f) * Ho + y) * Wo + x];
        for (int c = 0; c < s.channels; ++c)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
              din[(static_cast<std::size_t>(c) * s.height + y + ky) * s.width + x + kx] +=
                  g * weights[((f * s.channels + c) * k + ky) * k + kx];
      }
}

template <typename Real>
void relu_maxpool2x2(std::span<const Real> pre, Shape3 s, std::span<Real> out,
                     std::span<std::int32_t> argmax) {
  const int Hp = s.height / 2, Wp = s.width / 2;
  for (int c = 0; c < s.channels; ++c)
    for (int y = 0; y < Hp; ++y)
      for (int x = 0; x < Wp; ++x) {
        std::int32_t best = -1;
        Real v = 0;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const auto i = static_cast<std::int32_t>((c * s.height + 2 * y + dy) * s.width + 2 * x + dx);
            if (best < 0 || pre[i] > v) {
              v = pre[i];
              best = i;
            }
          }
        const std::size_t o = (static_cast<std::size_t>(c) * Hp + y) * Wp + x;
        out[o] = std::max(v, Real(0));
        argmax[o] = best;
      }
}

template <typename Real>
void relu_maxpool2x2_backward(std::span<const Real> pre, std::span<const Real> dout,
                              std::span<const std::int32_t> argmax, std::span<Real> dpre) {
  for (std::size_t i = 0; i < dout.size(); ++i) {
    if (pre[argmax[i]] > Real(0)) dpre[argmax[i]] += dout[i];
  }
}

template <typename Real>
void matmul_rows(std::span<const Real> w, int rows, int cols, std::span<const Real> x, int n,
                 std::span<Real> y) {
  for (int t = 0; t < n; ++t)
    for (int r = 0; r < rows; ++r) {
      Real acc = 0;
      for (int k = 0; k < cols; ++k)
        acc += w[static_cast<std::size_t>(r) * cols + k] * x[static_cast<std::size_t>(t) * cols + k];
      y[static_cast<std::size_t>(t) * rows + r] += acc;
    }
}

template <typename Real>
void matmul_rows_backward(std::span<const Real> w, int rows, int cols, std::span<const Real> x,
                          int n, std::span<const Real> dy, std::span<Real> dw,
                          std::span<Real> dx) {
  for (int t = 0; t < n; ++t)
    for (int r = 0; r < rows; ++r) {
      const Real g = dy[static_cast<std::size_t>(t) * rows + r];
      for (int k = 0; k < cols; ++k) {
        if (!dw.empty())
          dw[static_cast<std::size_t>(r) * cols + k] += g * x[static_cast<std::size_t>(t) * cols + k];
        if (!dx.empty())
          dx[static_cast<std::size_t>(t) * cols + k] += g * w[static_cast<std::size_t>(r) * cols + k];
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

}  // namespace pcount::kernels::reference
