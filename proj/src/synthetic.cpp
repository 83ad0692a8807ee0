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
#include "pcount/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pcount/errors.hpp"

namespace pcount {

namespace {

// Bin centres for the default 4-level quantizer. Texture values stay this far
// from bin edges so the drift in gain never changes a code.
constexpr std::array<int, 2> kTextureLevels{96, 160};
constexpr int kTextureJitter = 8;
constexpr double kMaxGain = 0.13;

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

void SceneConfig::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("scene dimensions must be positive");
  if (frames < 0 || actors < 0 || fps <= 0) throw ConfigError("frames, actors and fps must be non-negative");
  if (radius_x_min <= 0 || radius_x_min > radius_x_max || radius_y_min <= 0 || radius_y_min > radius_y_max)
    throw ConfigError("bad actor radius range");
  if (speed_min <= 0 || speed_min > speed_max) throw ConfigError("bad actor speed range");
  if (standstill_probability < 0 || standstill_probability > 1) throw ConfigError("standstill probability outside [0,1]");
  if (dwell_min < 0 || dwell_min > dwell_max || respawn_max < 0) throw ConfigError("bad dwell or respawn range");
  if (illumination_amplitude < 0 || illumination_amplitude > kMaxGain)
    throw ConfigError("illumination amplitude must lie in [0, 0.13]");
  if (illumination_period <= 0) throw ConfigError("illumination period must be positive");
  if (uniform_fraction < 0 || uniform_fraction > 1) throw ConfigError("uniform fraction outside [0,1]");
  if (always_visible && (2 * radius_x_max >= width || 2 * radius_y_max >= height))
    throw ConfigError("actors too large to stay inside the viewport");
  for (const auto& e : furniture)
    if (e.frame < 0 || e.width < 0 || e.height < 0) throw ConfigError("bad furniture event");
}

SceneGenerator::SceneGenerator(SceneConfig config) : config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  std::stable_sort(config_.furniture.begin(), config_.furniture.end(),
                   [](const FurnitureEvent& a, const FurnitureEvent& b) { return a.frame < b.frame; });

  std::mt19937_64 tex_rng(config_.background_seed);
  const int w = config_.width, h = config_.height;
  const int bw = (w + 7) / 8;
  std::vector<std::array<int, 3>> blocks(static_cast<std::size_t>(bw) * ((h + 7) / 8));
  for (auto& b : blocks)
    for (auto& c : b) c = kTextureLevels[tex_rng() % 2];
  std::uniform_int_distribution<int> jitter(-kTextureJitter, kTextureJitter);
  texture_.resize(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        texture_[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
            static_cast<std::uint8_t>(blocks[static_cast<std::size_t>(y / 8) * bw + x / 8][c] + jitter(tex_rng));

  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int uniform_actors = static_cast<int>(std::lround(config_.uniform_fraction * config_.actors));
  actors_.resize(config_.actors);
  for (int i = 0; i < config_.actors; ++i) {
    Actor& a = actors_[i];
    a.uniform = i < uniform_actors;
    a.rx = config_.radius_x_min + u(rng_) * (config_.radius_x_max - config_.radius_x_min);
    a.ry = config_.radius_y_min + u(rng_) * (config_.radius_y_max - config_.radius_y_min);
    a.speed = config_.speed_min + u(rng_) * (config_.speed_max - config_.speed_min);
    if (a.uniform) {
      a.base = config_.uniform_rgb;
    } else {
      // green pinned to an extreme so the actor always differs from the texture
      a.base = {static_cast<std::uint8_t>(rng_() % 256),
                static_cast<std::uint8_t>(rng_() % 2 ? 235 + rng_() % 21 : rng_() % 21),
                static_cast<std::uint8_t>(rng_() % 256)};
    }
    if (config_.always_visible) {
      const auto p = interior_point(a);
      a.x = p[0];
      a.y = p[1];
      a.active = true;
    } else {
      a.wait_left = static_cast<int>(rng_() % (config_.respawn_max + 1));
    }
  }
}

std::array<double, 2> SceneGenerator::interior_point(const Actor& a) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double mx = config_.always_visible ? a.rx : 0.0;
  const double my = config_.always_visible ? a.ry : 0.0;
  return {mx + u(rng_) * (config_.width - 2 * mx), my + u(rng_) * (config_.height - 2 * my)};
}

std::array<double, 2> SceneGenerator::outside_point(const Actor& a) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double w = config_.width, h = config_.height;
  switch (rng_() % 4) {
    case 0: return {-a.rx - 1, u(rng_) * h};
    case 1: return {w + a.rx + 1, u(rng_) * h};
    case 2: return {u(rng_) * w, -a.ry - 1};
    default: return {u(rng_) * w, h + a.ry + 1};
  }
}

void SceneGenerator::spawn(Actor& a) {
  const auto entry = outside_point(a);
  a.x = entry[0];
  a.y = entry[1];
  a.targets.clear();
  const int waypoints = 1 + static_cast<int>(rng_() % 3);
  for (int i = 0; i < waypoints; ++i) a.targets.push_back(interior_point(a));
  a.targets.push_back(outside_point(a));
  std::reverse(a.targets.begin(), a.targets.end());  // consumed from the back
  a.active = true;
}

void SceneGenerator::step(Actor& a) {
  if (!a.active) {
    if (a.wait_left > 0)
      --a.wait_left;
    else
      spawn(a);
    return;
  }
  if (a.pause_left > 0) {
    --a.pause_left;
    return;
  }
  if (a.targets.empty()) {
    if (config_.always_visible) {
      a.targets.push_back(interior_point(a));
    } else {
      a.active = false;
      a.wait_left = static_cast<int>(rng_() % (config_.respawn_max + 1));
      return;
    }
  }
  const auto t = a.targets.back();
  const double dx = t[0] - a.x, dy = t[1] - a.y;
  const double d = std::hypot(dx, dy);
  if (d <= a.speed) {
    a.x = t[0];
    a.y = t[1];
    a.targets.pop_back();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng_) < config_.standstill_probability)
      a.pause_left = config_.dwell_min + static_cast<int>(rng_() % (config_.dwell_max - config_.dwell_min + 1));
  } else {
    a.x += dx / d * a.speed;
    a.y += dy / d * a.speed;
  }
}

double SceneGenerator::gain() const {
  return 1.0 + config_.illumination_amplitude *
                   std::sin(2.0 * std::numbers::pi * frame_ / static_cast<double>(config_.illumination_period));
}

RawFrame SceneGenerator::clean_background() const {
  RawFrame f(config_.width, config_.height, static_cast<std::int64_t>(frame_) * 1000 / config_.fps, frame_);
  const double g = gain();
  for (std::size_t i = 0; i < texture_.size(); ++i) f.pixels[i] = clamp_byte(texture_[i] * g);
  return f;
}

SceneFrame SceneGenerator::next() {
  if (done()) throw RangeError("scene exhausted");
  const int w = config_.width, h = config_.height;
  while (next_event_ < config_.furniture.size() && config_.furniture[next_event_].frame <= frame_) {
    const auto& e = config_.furniture[next_event_++];
    for (int y = std::max(0, e.y); y < std::min(h, e.y + e.height); ++y)
      for (int x = std::max(0, e.x); x < std::min(w, e.x + e.width); ++x)
        for (int c = 0; c < 3; ++c) texture_[(static_cast<std::size_t>(y) * w + x) * 3 + c] = e.rgb[c];
  }

  SceneFrame out{clean_background(), PChannel(w, h)};
  const double g = gain();
  for (const Actor& a : actors_) {
    if (!a.active) continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(a.x - a.rx)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(a.x + a.rx)));
    const int y0 = std::max(0, static_cast<int>(std::floor(a.y - a.ry)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(a.y + a.ry)));
    bool visible = false;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double ex = (x + 0.5 - a.x) / a.rx, ey = (y + 0.5 - a.y) / a.ry;
        if (ex * ex + ey * ey > 1.0) continue;
        visible = true;
        std::array<double, 3> c{double(a.base[0]), double(a.base[1]), double(a.base[2])};
        if (!a.uniform) {
          // horizontal stripes on red and blue give customers a texture
          const double s = (static_cast<int>(std::floor((y + 0.5 - a.y) / 3.0)) & 1) ? 25.0 : -25.0;
          c[0] += s;
          c[2] -= s;
        }
        std::uint8_t* p = out.rgb.pixel(x, y);
        for (int k = 0; k < 3; ++k) p[k] = clamp_byte(std::clamp(c[k], 0.0, 255.0) * g);
        out.mask.bits[static_cast<std::size_t>(y) * w + x] = 1;
      }
    }
    if (visible) {
      ++out.total;
      if (!a.uniform) ++out.customers;
    }
  }

  for (Actor& a : actors_) step(a);
  ++frame_;
  return out;
}

std::pair<std::vector<SceneFrame>, GroundTruth> generate(const SceneConfig& config) {
  SceneGenerator gen(config);
  std::vector<SceneFrame> frames;
  GroundTruth gt;
  while (!gen.done()) {
    SceneFrame f = gen.next();
    gt.total.push_back(f.total);
    gt.customers.push_back(f.customers);
    gt.masks.push_back(f.mask);
    frames.push_back(std::move(f));
  }
  return {std::move(frames), std::move(gt)};
}

LabelTable label_stream(const GroundTruth& gt, int fps) {
  if (fps <= 0) throw ConfigError("fps must be positive");
  LabelTable t;
  for (std::size_t i = 0; i < gt.total.size(); ++i)
    t.rows.push_back({static_cast<std::int64_t>(i), static_cast<std::int64_t>(i) * 1000 / fps,
                      {gt.total[i], gt.customers[i]}});
  return t;
}

namespace {

PChannel nearest_mask(const PChannel& m, FrameSize size) {
  if (m.size() == size) return m;
  PChannel out(size.width, size.height);
  for (int y = 0; y < size.height; ++y) {
    const int sy = std::min(m.height - 1, static_cast<int>((y + 0.5) * m.height / size.height));
    for (int x = 0; x < size.width; ++x) {
      const int sx = std::min(m.width - 1, static_cast<int>((x + 0.5) * m.width / size.width));
      out.bits[static_cast<std::size_t>(y) * size.width + x] = m.bits[static_cast<std::size_t>(sy) * m.width + sx];
    }
  }
  return out;
}

}  // namespace

std::vector<LabelledFrame> synthesize_rgbp(const SceneConfig& scene, const SyntheticPipeline& pipeline) {
  if (pipeline.background_every < 1) throw ConfigError("background cadence must be >= 1");
  SceneGenerator gen(scene);
  BackgroundModel model(pipeline.size, pipeline.lambda_c, pipeline.eta, pipeline.tau);
  std::vector<LabelledFrame> out;
  while (!gen.done()) {
    const int index = gen.frame_index();
    SceneFrame sf = gen.next();
    RawFrame raw = resample(sf.rgb, pipeline.size);
    const QuantizedFrame q = quantize(raw, pipeline.lambda_c);
    if (model.initialized()) {
      PChannel p = pipeline.ground_truth_mask ? nearest_mask(sf.mask, pipeline.size)
                                              : model.foreground(q, pipeline.foreground);
      out.push_back({assemble_rgbp(std::move(raw), std::move(p)), {sf.total, sf.customers}});
    }
    if (index % pipeline.background_every == 0) model.ingest(q);
  }
  return out;
}

}  // namespace pcount
