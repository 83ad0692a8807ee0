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
#include "pcount/predictor.hpp"

#include <chrono>
#include <cstdio>

#include "pcount/errors.hpp"

namespace pcount {

void PredictorConfig::validate() const {
  if (background_interval_ms < 0) throw ConfigError("background interval must be >= 0");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (!(foreground.beta > 0.0 && foreground.beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
}

std::string format_prediction_event(const Prediction& p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%lld,%lld,%.9g", static_cast<long long>(p.timestamp_ms),
                static_cast<long long>(p.count), p.raw);
  return buf;
}

namespace {

FrameSize input_size(const LrcnModel<float>& model) {
  if (model.config().input_channels != 4) throw ConfigError("predictor needs a 4-channel RGBP model");
  return {model.config().input_width, model.config().input_height};
}

}  // namespace

Predictor::Predictor(std::shared_ptr<const LrcnModel<float>> model, PredictorConfig config)
    : model_(std::move(model)),
      config_(config),
      size_(input_size(*model_)),
      background_(size_, config.lambda_c, config.eta, config.tau) {
  config_.validate();
}

std::optional<Prediction> Predictor::ingest(const RawFrame& frame) {
  if (last_timestamp_ && frame.timestamp_ms < *last_timestamp_)
    throw RangeError("frame timestamp " + std::to_string(frame.timestamp_ms) + " precedes " +
                     std::to_string(*last_timestamp_));
  const auto t0 = std::chrono::steady_clock::now();
  RawFrame rgb = resample(frame, size_);
  const QuantizedFrame q = quantize(rgb, config_.lambda_c);
  last_timestamp_ = frame.timestamp_ms;
  const bool kept = frames_ % static_cast<std::uint64_t>(config_.stride) == 0;
  ++frames_;

  std::optional<Prediction> out;
  if (kept && background_.initialized()) {
    last_p_ = background_.foreground(q, config_.foreground);
    const RgbpFrame rgbp = assemble_rgbp(std::move(rgb), last_p_);
    window_.push_back(model_->frame_features(to_tensor<float>(rgbp), nullptr));
    ++window_pushes_;
    if (static_cast<int>(window_.size()) > model_->seq_len()) window_.pop_front();
    if (static_cast<int>(window_.size()) == model_->seq_len()) {
      std::vector<const std::vector<float>*> ptrs;
      for (const auto& f : window_) ptrs.push_back(&f);
      Prediction p;
      p.ready = true;
      p.raw = static_cast<double>(model_->forward_features(ptrs));
      p.count = round_count(p.raw);
      p.timestamp_ms = frame.timestamp_ms;
      p.frame_index = frame.index;
      p.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      {
        std::lock_guard lock(latest_mutex_);
        latest_ = p;
      }
      if (callback_) callback_(p);
      out = p;
    }
  }

  // background sampled on its own clock, after this frame's foreground
  if (!next_background_ms_ || frame.timestamp_ms >= *next_background_ms_) {
    background_.ingest(q);
    ++background_samples_;
    next_background_ms_ = frame.timestamp_ms + config_.background_interval_ms;
  }
  return out;
}

Prediction Predictor::latest() const {
  std::lock_guard lock(latest_mutex_);
  return latest_;
}

}  // namespace pcount
