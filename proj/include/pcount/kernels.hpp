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

// Data-parallel inner loops of the pipeline. The functions in pcount::kernels
// are OpenMP-parallel and laid out for vectorization; pcount::kernels::reference
// holds plain serial versions with identical contracts, kept for testing and
// benchmarking against.

#include <array>
#include <cstdint>
#include <span>

#include "pcount/tensor.hpp"

namespace pcount::kernels {

// ---- image -----------------------------------------------------------------

/// Bilinear resize of interleaved RGB, half-pixel centres, edge clamp.
void resize_bilinear(std::span<const std::uint8_t> src, int src_w, int src_h,
                     std::span<std::uint8_t> dst, int dst_w, int dst_h);

void quantize_rgb(std::span<const std::uint8_t> rgb, int lambda_c,
                  std::span<std::uint16_t> codes);

// ---- background model ------------------------------------------------------
// hist is pixel-major: hist[p * lambda + code].

/// Decrement the bins of \p removed (may be empty) then increment \p added.
void histogram_swap(std::span<std::uint16_t> hist, int lambda,
                    std::span<const std::uint16_t> removed,
                    std::span<const std::uint16_t> added);

/// background[p] = mode of hist[p], lowest code on ties.
void histogram_mode(std::span<const std::uint16_t> hist, int lambda,
                    std::span<std::uint16_t> background);

/// background[p] = mode(hist[p]) when max(hist[p]) >= min_count.
void gated_update(std::span<const std::uint16_t> hist, int lambda, int min_count,
                  std::span<std::uint16_t> background);

/// mask[p] = gray(|deq(codes[p]) - deq(background[p])|) > beta, gray being the
/// weighted sum of the per-channel differences.
void foreground_mask(std::span<const std::uint16_t> codes,
                     std::span<const std::uint16_t> background, int lambda_c,
                     double beta, const std::array<double, 3>& gray_weights,
                     std::span<std::uint8_t> mask);

// ---- network ---------------------------------------------------------------

/// Valid (unpadded) 2-D convolution. weights: [filters][in.channels][k][k].
/// out must have shape (filters, in.h - k + 1, in.w - k + 1); it is overwritten.
template <typename Real>
void conv2d_valid(std::span<const Real> in, Shape3 in_shape, std::span<const Real> weights,
                  std::span<const Real> bias, int filters, int kernel, std::span<Real> out);

/// Accumulates dL/dweights and dL/dbias given dL/dout.
template <typename Real>
void conv2d_backward_params(std::span<const Real> in, Shape3 in_shape, std::span<const Real> dout,
                            int filters, int kernel, std::span<Real> dweights,
                            std::span<Real> dbias);

/// Accumulates dL/din given dL/dout.
template <typename Real>
void conv2d_backward_input(std::span<const Real> weights, Shape3 in_shape,
                           std::span<const Real> dout, int filters, int kernel,
                           std::span<Real> din);

/// out = maxpool2x2(relu(pre)) with floor division of odd dims. argmax holds the
/// flat index into pre of each window's winner.
template <typename Real>
void relu_maxpool2x2(std::span<const Real> pre, Shape3 pre_shape, std::span<Real> out,
                     std::span<std::int32_t> argmax);

/// Accumulates dL/dpre from dL/dout through the pooled ReLU.
template <typename Real>
void relu_maxpool2x2_backward(std::span<const Real> pre, std::span<const Real> dout,
                              std::span<const std::int32_t> argmax, std::span<Real> dpre);

/// y[t][r] += dot(w[r], x[t]) for n row-major vectors x of length cols.
template <typename Real>
void matmul_rows(std::span<const Real> w, int rows, int cols, std::span<const Real> x, int n,
                 std::span<Real> y);

/// dw[r] += sum_t dy[t][r] x[t]; dx[t] += sum_r dy[t][r] w[r] (skipped when dx empty).
template <typename Real>
void matmul_rows_backward(std::span<const Real> w, int rows, int cols, std::span<const Real> x,
                          int n, std::span<const Real> dy, std::span<Real> dw,
                          std::span<Real> dx);

namespace reference {

void resize_bilinear(std::span<const std::uint8_t> src, int src_w, int src_h,
                     std::span<std::uint8_t> dst, int dst_w, int dst_h);
void quantize_rgb(std::span<const std::uint8_t> rgb, int lambda_c,
                  std::span<std::uint16_t> codes);
void histogram_swap(std::span<std::uint16_t> hist, int lambda,
                    std::span<const std::uint16_t> removed,
                    std::span<const std::uint16_t> added);
void histogram_mode(std::span<const std::uint16_t> hist, int lambda,
                    std::span<std::uint16_t> background);
void gated_update(std::span<const std::uint16_t> hist, int lambda, int min_count,
                  std::span<std::uint16_t> background);
void foreground_mask(std::span<const std::uint16_t> codes,
                     std::span<const std::uint16_t> background, int lambda_c,
                     double beta, const std::array<double, 3>& gray_weights,
                     std::span<std::uint8_t> mask);

template <typename Real>
void conv2d_valid(std::span<const Real> in, Shape3 in_shape, std::span<const Real> weights,
                  std::span<const Real> bias, int filters, int kernel, std::span<Real> out);
template <typename Real>
void conv2d_backward_params(std::span<const Real> in, Shape3 in_shape, std::span<const Real> dout,
                            int filters, int kernel, std::span<Real> dweights,
                            std::span<Real> dbias);
template <typename Real>
void conv2d_backward_input(std::span<const Real> weights, Shape3 in_shape,
                           std::span<const Real> dout, int filters, int kernel,
                           std::span<Real> din);
template <typename Real>
void relu_maxpool2x2(std::span<const Real> pre, Shape3 pre_shape, std::span<Real> out,
                     std::span<std::int32_t> argmax);
template <typename Real>
void relu_maxpool2x2_backward(std::span<const Real> pre, std::span<const Real> dout,
                              std::span<const std::int32_t> argmax, std::span<Real> dpre);
template <typename Real>
void matmul_rows(std::span<const Real> w, int rows, int cols, std::span<const Real> x, int n,
                 std::span<Real> y);
template <typename Real>
void matmul_rows_backward(std::span<const Real> w, int rows, int cols, std::span<const Real> x,
                          int n, std::span<const Real> dy, std::span<Real> dw,
                          std::span<Real> dx);

}  // namespace reference

/// Threads OpenMP will use for the parallel kernels.
int max_threads();

}  // namespace pcount::kernels
