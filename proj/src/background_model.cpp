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
#include "pcount/background_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pcount/errors.hpp"
#include "pcount/kernels.hpp"

namespace pcount {

std::uint16_t mode_of(std::span<const std::uint16_t> hist) {
  if (hist.empty()) throw RangeError("histogram has no bins");
  auto top = std::max_element(hist.begin(), hist.end());
  if (*top == 0) throw RangeError("histogram is empty");
  return static_cast<std::uint16_t>(top - hist.begin());
}

int gate_count(double tau, int eta) {
  // Absorb representation error of tau (0.6 * 20 == 12.000000000000002).
  return static_cast<int>(std::ceil(tau * eta - 1e-9 * eta));
}

std::uint16_t update_pixel(std::span<const std::uint16_t> hist, std::uint16_t prev_code,
                           double tau, int eta) {
  auto top = std::max_element(hist.begin(), hist.end());
  if (top == hist.end() || *top < gate_count(tau, eta)) return prev_code;
  return static_cast<std::uint16_t>(top - hist.begin());
}

BackgroundModel::BackgroundModel(FrameSize size, int lambda_c, int eta, double tau)
    : size_(size), lambda_c_(lambda_c), lambda_(lambda_c * lambda_c * lambda_c), eta_(eta),
      tau_(tau) {
  if (size.width < 1 || size.height < 1) throw ConfigError("background model needs a non-empty frame size");
  if (lambda_c < 2 || lambda_c > 16) throw ConfigError("lambda_c must be in [2, 16]");
  if (eta < 1 || eta > std::numeric_limits<std::uint16_t>::max()) {
    throw ConfigError("eta must be in [1, 65535], got " + std::to_string(eta));
  }
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must be in (0, 1]");
  gate_ = gate_count(tau, eta);
  ring_.assign(static_cast<std::size_t>(eta) * size.pixels(), 0);
  hist_.assign(size.pixels() * static_cast<std::size_t>(lambda_), 0);
  background_.width = size.width;
  background_.height = size.height;
  background_.lambda_c = lambda_c;
  background_.codes.assign(size.pixels(), 0);
}

std::size_t BackgroundModel::ring_size() const {
  return static_cast<std::size_t>(std::min<std::uint64_t>(frames_ingested_, static_cast<std::uint64_t>(eta_)));
}

void BackgroundModel::ingest(const QuantizedFrame& q) {
  if (q.size() != size_ || q.codes.size() != size_.pixels()) {
    throw InvalidFrameError("quantized frame " + std::to_string(q.width) + "x" +
                            std::to_string(q.height) + " does not match model " +
                            std::to_string(size_.width) + "x" + std::to_string(size_.height));
  }
  if (q.lambda_c != lambda_c_) throw InvalidFrameError("quantized frame uses a different lambda_c");

  const std::size_t n = size_.pixels();
  std::span<std::uint16_t> slot(ring_.data() + head_ * n, n);
  const bool full = frames_ingested_ >= static_cast<std::uint64_t>(eta_);
  kernels::histogram_swap(hist_, lambda_, full ? std::span<const std::uint16_t>(slot)
                                               : std::span<const std::uint16_t>(),
                          q.codes);
  std::copy(q.codes.begin(), q.codes.end(), slot.begin());
  head_ = (head_ + 1) % static_cast<std::size_t>(eta_);
  ++frames_ingested_;

  if (frames_ingested_ == static_cast<std::uint64_t>(eta_)) {
    kernels::histogram_mode(hist_, lambda_, background_.codes);
  } else if (frames_ingested_ > static_cast<std::uint64_t>(eta_)) {
    kernels::gated_update(hist_, lambda_, gate_, background_.codes);
  }
}

PChannel BackgroundModel::foreground(const QuantizedFrame& q, const ForegroundParams& params) const {
  if (!initialized()) {
    throw NotReadyError("background needs " + std::to_string(eta_) + " frames, has " +
                        std::to_string(frames_ingested_));
  }
  if (q.size() != size_ || q.lambda_c != lambda_c_) throw InvalidFrameError("quantized frame does not match model");
  if (!(params.beta > 0.0 && params.beta < 1.0)) throw ConfigError("beta must be in (0, 1)");
  PChannel p(size_.width, size_.height);
  kernels::foreground_mask(q.codes, background_.codes, lambda_c_, params.beta, params.gray_weights, p.bits);
  return p;
}

BackgroundSnapshot BackgroundModel::snapshot() const { return {background_, initialized()}; }

std::span<const std::uint16_t> BackgroundModel::histogram(int x, int y) const {
  const std::size_t p = static_cast<std::size_t>(y) * size_.width + x;
  return {hist_.data() + p * lambda_, static_cast<std::size_t>(lambda_)};
}

std::vector<std::span<const std::uint16_t>> BackgroundModel::ring() const {
  const std::size_t n = size_.pixels();
  const std::size_t held = ring_size();
  const std::size_t start = held < static_cast<std::size_t>(eta_) ? 0 : head_;
  std::vector<std::span<const std::uint16_t>> frames;
  frames.reserve(held);
  for (std::size_t i = 0; i < held; ++i) {
    const std::size_t slot = (start + i) % static_cast<std::size_t>(eta_);
    frames.emplace_back(ring_.data() + slot * n, n);
  }
  return frames;
}

QuantizedFrame preprocess(const RawFrame& frame, FrameSize size, int lambda_c) {
  return quantize(resample(frame, size), lambda_c);
}

}  // namespace pcount
