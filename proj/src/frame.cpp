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
#include "pcount/frame.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcount/errors.hpp"
#include "pcount/kernels.hpp"

namespace pcount {

RawFrame::RawFrame(int w, int h, std::int64_t ts, std::int64_t idx)
    : width(w), height(h), pixels(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0) * 3, 0),
      timestamp_ms(ts), index(idx) {}

void RawFrame::validate() const {
  if (width < 1 || height < 1) {
    throw InvalidFrameError("frame has zero size (" + std::to_string(width) + "x" +
                            std::to_string(height) + ")");
  }
  if (pixels.size() != static_cast<std::size_t>(width) * height * 3) {
    throw InvalidFrameError("pixel buffer holds " + std::to_string(pixels.size()) +
                            " bytes, expected " +
                            std::to_string(static_cast<std::size_t>(width) * height * 3));
  }
}

std::size_t PChannel::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

RawFrame resample(const RawFrame& frame, FrameSize target) {
  frame.validate();
  if (target.width < 1 || target.height < 1) throw InvalidFrameError("resample target has zero size");
  if (frame.size() == target) return frame;
  RawFrame out(target.width, target.height, frame.timestamp_ms, frame.index);
  kernels::resize_bilinear(frame.pixels, frame.width, frame.height, out.pixels, target.width,
                           target.height);
  return out;
}

namespace {

void check_lambda_c(int lambda_c) {
  if (lambda_c < 2 || lambda_c > 16) {
    throw RangeError("lambda_c must be in [2, 16], got " + std::to_string(lambda_c));
  }
}

}  // namespace

QuantizedFrame quantize(const RawFrame& frame, int lambda_c) {
  frame.validate();
  check_lambda_c(lambda_c);
  QuantizedFrame q;
  q.width = frame.width;
  q.height = frame.height;
  q.lambda_c = lambda_c;
  q.codes.resize(frame.size().pixels());
  kernels::quantize_rgb(frame.pixels, lambda_c, q.codes);
  return q;
}

std::array<double, 3> dequantize_code(std::uint32_t code, int lambda_c) {
  check_lambda_c(lambda_c);
  const std::uint32_t lambda = static_cast<std::uint32_t>(lambda_c * lambda_c * lambda_c);
  if (code >= lambda) {
    throw RangeError("code " + std::to_string(code) + " out of range for lambda " +
                     std::to_string(lambda));
  }
  const double scale = lambda_c - 1;
  const auto lc = static_cast<std::uint32_t>(lambda_c);
  return {(code / (lc * lc)) / scale, ((code / lc) % lc) / scale, (code % lc) / scale};
}

std::uint16_t encode_normalized(const std::array<double, 3>& rgb, int lambda_c) {
  check_lambda_c(lambda_c);
  int code = 0;
  for (double v : rgb) {
    const int bin = std::clamp(static_cast<int>(std::lround(v * (lambda_c - 1))), 0, lambda_c - 1);
    code = code * lambda_c + bin;
  }
  return static_cast<std::uint16_t>(code);
}

RgbpFrame assemble_rgbp(RawFrame rgb, PChannel p) {
  rgb.validate();
  if (rgb.size() != p.size() || p.bits.size() != rgb.size().pixels()) {
    throw InvalidFrameError("RGB (" + std::to_string(rgb.width) + "x" + std::to_string(rgb.height) +
                            ") and P (" + std::to_string(p.width) + "x" + std::to_string(p.height) +
                            ") are not congruent");
  }
  if (std::any_of(p.bits.begin(), p.bits.end(), [](std::uint8_t b) { return b > 1; })) {
    throw InvalidFrameError("P channel is not binary");
  }
  return RgbpFrame{std::move(rgb), std::move(p)};
}

std::size_t expected_window_count(std::size_t raw_frames, int seq_len, int stride) {
  if (raw_frames == 0) return 0;
  const auto kept = static_cast<std::int64_t>((raw_frames - 1) / static_cast<std::size_t>(stride)) + 1;
  return static_cast<std::size_t>(std::max<std::int64_t>(0, kept - seq_len + 1));
}

SequenceWindow::SequenceWindow(int seq_len, int stride) : seq_len_(seq_len), stride_(stride) {
  if (seq_len < 1) throw ConfigError("sequence length must be >= 1");
  if (stride < 1) throw ConfigError("stride must be >= 1");
}

bool SequenceWindow::is_kept(std::int64_t raw_index) const {
  const std::int64_t origin = origin_.value_or(raw_index);
  const std::int64_t offset = raw_index - origin;
  return offset >= 0 && offset % stride_ == 0;
}

std::optional<RgbpSequence> SequenceWindow::push(RgbpFrame frame) {
  if (!origin_) origin_ = frame.index();
  if (!is_kept(frame.index())) return std::nullopt;
  if (!frames_.empty() && frames_.back().index() + stride_ != frame.index()) frames_.clear();
  frames_.push_back(std::move(frame));
  if (static_cast<int>(frames_.size()) > seq_len_) frames_.pop_front();
  if (static_cast<int>(frames_.size()) < seq_len_) return std::nullopt;
  RgbpSequence seq;
  seq.stride = stride_;
  seq.frames.assign(frames_.begin(), frames_.end());
  return seq;
}

void SequenceWindow::reset() {
  origin_.reset();
  frames_.clear();
}

template <typename Real>
Tensor3<Real> to_tensor(const RgbpFrame& frame) {
  const int w = frame.rgb.width, h = frame.rgb.height;
  Tensor3<Real> t(Shape3{4, h, w});
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  const Real inv = Real(1) / Real(255);
  for (std::size_t i = 0; i < plane; ++i) {
    t.data[i] = frame.rgb.pixels[i * 3] * inv;
    t.data[plane + i] = frame.rgb.pixels[i * 3 + 1] * inv;
    t.data[2 * plane + i] = frame.rgb.pixels[i * 3 + 2] * inv;
    t.data[3 * plane + i] = frame.p.bits[i] ? Real(1) : Real(0);
  }
  return t;
}

template Tensor3<float> to_tensor<float>(const RgbpFrame&);
template Tensor3<double> to_tensor<double>(const RgbpFrame&);

}  // namespace pcount
