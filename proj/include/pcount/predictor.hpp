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

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pcount/background_model.hpp"
#include "pcount/frame.hpp"
#include "pcount/lrcn.hpp"

namespace pcount {

struct PredictorConfig {
  int lambda_c = kDefaultLambdaC;
  int eta = 100;
  double tau = 0.8;
  ForegroundParams foreground{};
  std::int64_t background_interval_ms = 1000;  // background sampling cadence
  int stride = kDefaultStride;                  // every stride-th ingested frame enters the window

  void validate() const;
};

struct Prediction {
  bool ready = false;
  std::int64_t count = 0;
  double raw = 0.0;
  std::int64_t timestamp_ms = 0;
  std::int64_t frame_index = 0;
  double latency_ms = 0.0;  // foreground + window + forward for this prediction
};

/// "timestamp_ms,count,raw_output"
std::string format_prediction_event(const Prediction& p);

/// Streaming prediction pipeline. ingest() is a single ordered writer;
/// latest() may be called from any thread.
class Predictor {
 public:
  Predictor(std::shared_ptr<const LrcnModel<float>> model, PredictorConfig config = {});

  /// Returns a prediction when this frame completes a window. Throws
  /// RangeError when the timestamp goes backwards.
  std::optional<Prediction> ingest(const RawFrame& frame);
  [[nodiscard]] Prediction latest() const;

  void on_prediction(std::function<void(const Prediction&)> callback) { callback_ = std::move(callback); }

  [[nodiscard]] const BackgroundModel& background() const { return background_; }
  [[nodiscard]] const PredictorConfig& config() const { return config_; }
  [[nodiscard]] std::uint64_t frames_ingested() const { return frames_; }
  [[nodiscard]] std::uint64_t background_samples() const { return background_samples_; }
  [[nodiscard]] std::uint64_t window_pushes() const { return window_pushes_; }
  [[nodiscard]] std::size_t window_fill() const { return window_.size(); }
  [[nodiscard]] const PChannel& last_foreground() const { return last_p_; }

 private:
  std::shared_ptr<const LrcnModel<float>> model_;
  PredictorConfig config_;
  FrameSize size_;
  BackgroundModel background_;
  std::deque<std::vector<float>> window_;
  std::optional<std::int64_t> last_timestamp_;
  std::optional<std::int64_t> next_background_ms_;
  std::uint64_t frames_ = 0;
  std::uint64_t background_samples_ = 0;
  std::uint64_t window_pushes_ = 0;
  PChannel last_p_;
  std::function<void(const Prediction&)> callback_;
  mutable std::mutex latest_mutex_;
  Prediction latest_;
};

}  // namespace pcount
