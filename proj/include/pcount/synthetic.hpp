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
#include <optional>
#include <random>
#include <vector>

#include "pcount/background_model.hpp"
#include "pcount/dataset_io.hpp"
#include "pcount/frame.hpp"

namespace pcount {

struct FurnitureEvent {
  int frame = 0;
  int x = 0, y = 0, width = 0, height = 0;
  std::array<std::uint8_t, 3> rgb{160, 96, 96};
};

struct SceneConfig {
  int width = kFrameWidth;
  int height = kFrameHeight;
  int frames = 500;
  int fps = 5;
  std::uint64_t background_seed = 1;
  int actors = 3;
  double radius_x_min = 6, radius_x_max = 12;
  double radius_y_min = 14, radius_y_max = 26;
  double speed_min = 1.0, speed_max = 4.0;  // pixels per frame
  double standstill_probability = 0.3;
  int dwell_min = 5, dwell_max = 40;
  int respawn_max = 60;        // frames an actor may wait off screen
  bool always_visible = false;  // actors stay fully inside the viewport
  std::vector<FurnitureEvent> furniture;
  double illumination_amplitude = 0.05;  // peak relative gain change
  int illumination_period = 600;         // frames
  double uniform_fraction = 0.0;         // share of actors wearing the uniform
  std::array<std::uint8_t, 3> uniform_rgb{200, 16, 40};
  std::uint64_t seed = 7;

  /// Throws ConfigError on negative counts, empty ranges or a gain that could
  /// push the background texture out of its quantization bins.
  void validate() const;
};

struct SceneFrame {
  RawFrame rgb;
  PChannel mask;
  int total = 0;
  int customers = 0;
};

struct GroundTruth {
  std::vector<int> total;
  std::vector<int> customers;
  std::vector<PChannel> masks;
};

/// Streams rendered frames one at a time; deterministic for a given config.
class SceneGenerator {
 public:
  explicit SceneGenerator(SceneConfig config);

  [[nodiscard]] bool done() const { return frame_ >= config_.frames; }
  [[nodiscard]] int frame_index() const { return frame_; }
  /// Renders the current frame and advances the scene by one step.
  SceneFrame next();
  /// Background of the current frame with every actor removed.
  [[nodiscard]] RawFrame clean_background() const;
  [[nodiscard]] const SceneConfig& config() const { return config_; }

 private:
  struct Actor {
    bool uniform = false;
    double rx = 0, ry = 0, speed = 0;
    double x = 0, y = 0;
    std::array<std::uint8_t, 3> base{};
    std::vector<std::array<double, 2>> targets;
    int pause_left = 0;
    int wait_left = 0;
    bool active = false;
  };

  void spawn(Actor& a);
  void step(Actor& a);
  std::array<double, 2> interior_point(const Actor& a);
  std::array<double, 2> outside_point(const Actor& a);
  [[nodiscard]] double gain() const;

  SceneConfig config_;
  std::mt19937_64 rng_;
  std::vector<std::uint8_t> texture_;  // RGB, furniture events applied as they fire
  std::vector<Actor> actors_;
  std::size_t next_event_ = 0;
  int frame_ = 0;
};

std::pair<std::vector<SceneFrame>, GroundTruth> generate(const SceneConfig& config);

LabelTable label_stream(const GroundTruth& gt, int fps);

struct SyntheticPipeline {
  FrameSize size{};  // network input size
  int lambda_c = kDefaultLambdaC;
  int eta = 100;
  double tau = 0.8;
  ForegroundParams foreground{};
  int background_every = 1;  // feed the background model every n-th frame
  bool ground_truth_mask = false;
};

struct LabelledFrame {
  RgbpFrame frame;
  PeopleLabel label;
};

/// Runs scene -> resample -> background model -> foreground -> RGBP and returns
/// every frame produced once the background is initialized.
std::vector<LabelledFrame> synthesize_rgbp(const SceneConfig& scene, const SyntheticPipeline& pipeline);

}  // namespace pcount
