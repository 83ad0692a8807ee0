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
#include <span>
#include <vector>

#include "pcount/frame.hpp"

namespace pcount {

struct ForegroundParams {
  double beta = 0.1;
  std::array<double, 3> gray_weights{0.299, 0.587, 0.114};
};

struct BackgroundSnapshot {
  QuantizedFrame background;
  bool initialized = false;
};

/// Most frequent code of a histogram, lowest code on ties. Throws RangeError on
/// an empty histogram.
std::uint16_t mode_of(std::span<const std::uint16_t> hist);

/// Smallest integer count satisfying count >= tau * eta.
int gate_count(double tau, int eta);

/// Background colour of a pixel after a τ-gated update: the mode of \p hist if
/// its top bin holds at least tau * eta samples, otherwise \p prev_code.
std::uint16_t update_pixel(std::span<const std::uint16_t> hist, std::uint16_t prev_code,
                           double tau, int eta);

/// Streaming per-pixel histogram background model.
///
/// A ring buffer holds the last eta quantized frames and per-pixel histograms
/// track the codes currently in the ring. The background is the per-pixel mode
/// once eta frames have been seen; after that a pixel only changes when one bin
/// holds at least tau * eta of the buffered samples, so people standing still
/// for a while are not absorbed into the background.
///
/// Single mutator. Use snapshot() to hand a consistent copy to readers.
class BackgroundModel {
 public:
  explicit BackgroundModel(FrameSize size = {}, int lambda_c = kDefaultLambdaC, int eta = 100,
                           double tau = 0.8);

  void ingest(const QuantizedFrame& q);

  /// Binary foreground of \p q against the current background. Throws
  /// NotReadyError before initialization.
  [[nodiscard]] PChannel foreground(const QuantizedFrame& q, const ForegroundParams& params = {}) const;

  [[nodiscard]] BackgroundSnapshot snapshot() const;

  [[nodiscard]] bool initialized() const { return frames_ingested_ >= static_cast<std::uint64_t>(eta_); }
  [[nodiscard]] const QuantizedFrame& background() const { return background_; }
  [[nodiscard]] std::span<const std::uint16_t> histogram(int x, int y) const;
  [[nodiscard]] std::span<const std::uint16_t> histograms() const { return hist_; }
  /// Frames currently held in the ring, oldest first.
  [[nodiscard]] std::vector<std::span<const std::uint16_t>> ring() const;

  [[nodiscard]] FrameSize size() const { return size_; }
  [[nodiscard]] int lambda_c() const { return lambda_c_; }
  [[nodiscard]] int lambda() const { return lambda_; }
  [[nodiscard]] int eta() const { return eta_; }
  [[nodiscard]] double tau() const { return tau_; }
  [[nodiscard]] int gate() const { return gate_; }
  [[nodiscard]] std::uint64_t frames_ingested() const { return frames_ingested_; }
  [[nodiscard]] std::size_t ring_size() const;

 private:
  FrameSize size_;
  int lambda_c_;
  int lambda_;
  int eta_;
  double tau_;
  int gate_;
  std::vector<std::uint16_t> ring_;  // eta_ slots of size_.pixels() codes
  std::size_t head_ = 0;             // next slot to overwrite
  std::vector<std::uint16_t> hist_;  // pixel-major, lambda_ bins per pixel
  QuantizedFrame background_;
  std::uint64_t frames_ingested_ = 0;
};

/// Runs the per-frame preprocessing that feeds the background model.
QuantizedFrame preprocess(const RawFrame& frame, FrameSize size, int lambda_c);

}  // namespace pcount
