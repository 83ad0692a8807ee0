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

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "pcount/label.hpp"
#include "pcount/tensor.hpp"

namespace pcount {

inline constexpr int kFrameWidth = 400;
inline constexpr int kFrameHeight = 225;
inline constexpr int kDefaultLambdaC = 4;
inline constexpr int kDefaultStride = 5;

struct FrameSize {
  int width = kFrameWidth;
  int height = kFrameHeight;

  [[nodiscard]] std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  friend bool operator==(const FrameSize&, const FrameSize&) = default;
};

/// Row-major interleaved 8-bit RGB image as captured (or after resampling).
struct RawFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
  std::int64_t timestamp_ms = 0;
  std::int64_t index = 0;

  RawFrame() = default;
  RawFrame(int w, int h, std::int64_t ts = 0, std::int64_t idx = 0);

  [[nodiscard]] FrameSize size() const { return {width, height}; }
  std::uint8_t* pixel(int x, int y) {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* pixel(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  /// Throws InvalidFrameError on zero dims or a buffer of the wrong length.
  void validate() const;
};

/// Per-pixel colour codes in [0, lambda_c^3).
struct QuantizedFrame {
  int width = 0;
  int height = 0;
  int lambda_c = kDefaultLambdaC;
  std::vector<std::uint16_t> codes;

  [[nodiscard]] FrameSize size() const { return {width, height}; }
  [[nodiscard]] int lambda() const { return lambda_c * lambda_c * lambda_c; }
};

/// Binary foreground mask, one byte per pixel holding 0 or 1.
struct PChannel {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  PChannel() = default;
  PChannel(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}
  [[nodiscard]] FrameSize size() const { return {width, height}; }
  [[nodiscard]] std::size_t count() const;
};

struct RgbpFrame {
  RawFrame rgb;
  PChannel p;

  [[nodiscard]] std::int64_t index() const { return rgb.index; }
  [[nodiscard]] std::int64_t timestamp_ms() const { return rgb.timestamp_ms; }
};

struct RgbpSequence {
  std::vector<RgbpFrame> frames;
  int stride = kDefaultStride;
  std::optional<PeopleLabel> label;
};

/// Bilinear resampling (half-pixel centres, edge clamp) to \p target.
RawFrame resample(const RawFrame& frame, FrameSize target = {});

/// Uniform quantization: bin = floor(v * lambda_c / 256), code = r*lc^2 + g*lc + b.
QuantizedFrame quantize(const RawFrame& frame, int lambda_c = kDefaultLambdaC);

inline std::uint16_t quantize_pixel(std::uint8_t r, std::uint8_t g, std::uint8_t b, int lambda_c) {
  const int rb = (r * lambda_c) >> 8;
  const int gb = (g * lambda_c) >> 8;
  const int bb = (b * lambda_c) >> 8;
  return static_cast<std::uint16_t>((rb * lambda_c + gb) * lambda_c + bb);
}

/// Normalized colour of a code, each channel bin / (lambda_c - 1).
std::array<double, 3> dequantize_code(std::uint32_t code, int lambda_c);

/// Inverse of dequantize_code, mapping a normalized colour back to its code.
std::uint16_t encode_normalized(const std::array<double, 3>& rgb, int lambda_c);

RgbpFrame assemble_rgbp(RawFrame rgb, PChannel p);

/// Number of sequences window() emits for N raw frames.
std::size_t expected_window_count(std::size_t raw_frames, int seq_len, int stride);

/// Streaming accumulator that keeps every stride-th raw frame (relative to the
/// first index it sees) and emits the last seq_len kept frames once available.
/// A gap in kept indices restarts the window.
class SequenceWindow {
 public:
  SequenceWindow(int seq_len, int stride);

  [[nodiscard]] bool is_kept(std::int64_t raw_index) const;
  /// Returns the full window ending at \p frame if \p frame is kept and the
  /// window is full; std::nullopt otherwise.
  std::optional<RgbpSequence> push(RgbpFrame frame);
  void reset();

  [[nodiscard]] int seq_len() const { return seq_len_; }
  [[nodiscard]] int stride() const { return stride_; }
  [[nodiscard]] std::size_t buffered() const { return frames_.size(); }

 private:
  int seq_len_;
  int stride_;
  std::optional<std::int64_t> origin_;
  std::deque<RgbpFrame> frames_;
};

/// RGB scaled to [0,1], P in {0,1}; channel order R,G,B,P.
template <typename Real>
Tensor3<Real> to_tensor(const RgbpFrame& frame);

}  // namespace pcount
