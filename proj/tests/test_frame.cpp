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
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pcount/errors.hpp"
#include "pcount/frame.hpp"

using namespace pcount;

namespace {

RawFrame filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RawFrame f(w, h);
  for (std::size_t i = 0; i < f.pixels.size(); i += 3) {
    f.pixels[i] = r;
    f.pixels[i + 1] = g;
    f.pixels[i + 2] = b;
  }
  return f;
}

RgbpFrame rgbp_at(std::int64_t index) {
  RawFrame rgb(4, 3, index * 50, index);
  return assemble_rgbp(std::move(rgb), PChannel(4, 3));
}

}  // namespace

TEST_CASE("resample") {
  SUBCASE("identity at the target size") {
    RawFrame f(400, 225);
    std::mt19937 rng(1);
    for (auto& v : f.pixels) v = static_cast<std::uint8_t>(rng());
    CHECK(resample(f).pixels == f.pixels);
  }
  SUBCASE("constant field stays constant") {
    const RawFrame out = resample(filled(800, 450, 128, 128, 128));
    CHECK(out.width == 400);
    CHECK(out.height == 225);
    for (auto v : out.pixels) REQUIRE(v == 128);
  }
  SUBCASE("checkerboard matches a double-precision bilinear reference") {
    RawFrame f(1280, 720);
    for (int y = 0; y < 720; ++y)
      for (int x = 0; x < 1280; ++x) {
        const std::uint8_t v = ((x / 7 + y / 5) % 2) ? 230 : 20;
        auto* p = f.pixel(x, y);
        p[0] = v;
        p[1] = static_cast<std::uint8_t>(255 - v);
        p[2] = static_cast<std::uint8_t>((x * 3 + y) % 256);
      }
    const RawFrame out = resample(f);
    const auto expected = oracle::bilinear(f.pixels, 1280, 720, 400, 225);
    int worst = 0;
    for (std::size_t i = 0; i < out.pixels.size(); ++i)
      worst = std::max(worst, static_cast<int>(std::abs(out.pixels[i] - expected[i]) + 0.5));
    CHECK(worst <= 1);
  }
  SUBCASE("upsampling and odd sizes") {
    const RawFrame out = resample(filled(3, 2, 10, 20, 30), {7, 5});
    for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
      CHECK(out.pixels[i] == 10);
      CHECK(out.pixels[i + 2] == 30);
    }
  }
  SUBCASE("zero-sized input is rejected") {
    CHECK_THROWS_AS(resample(RawFrame(0, 10)), InvalidFrameError);
    RawFrame bad(4, 4);
    bad.pixels.pop_back();
    CHECK_THROWS_AS(resample(bad), InvalidFrameError);
  }
}

TEST_CASE("quantize") {
  auto one = [](std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return quantize(filled(1, 1, r, g, b), 4).codes[0];
  };
  CHECK(one(0, 0, 0) == 0);
  CHECK(one(255, 255, 255) == 63);
  CHECK(one(128, 64, 200) == 39);
  const QuantizedFrame q = quantize(filled(5, 4, 1, 2, 3));
  CHECK(q.width == 5);
  CHECK(q.lambda() == 64);
  CHECK_THROWS_AS(quantize(filled(1, 1, 0, 0, 0), 1), RangeError);
  CHECK_THROWS_AS(quantize(filled(1, 1, 0, 0, 0), 17), RangeError);
}

TEST_CASE("dequantize_code") {
  CHECK(dequantize_code(0, 4) == std::array<double, 3>{0, 0, 0});
  CHECK(dequantize_code(63, 4) == std::array<double, 3>{1, 1, 1});
  const auto c = dequantize_code(39, 4);
  CHECK(c[0] == doctest::Approx(2.0 / 3.0));
  CHECK(c[1] == doctest::Approx(1.0 / 3.0));
  CHECK(c[2] == doctest::Approx(1.0));
  CHECK_THROWS_AS(dequantize_code(64, 4), RangeError);
}

TEST_CASE("quantize . dequantize . quantize == quantize") {
  std::mt19937 rng(7);
  for (int lc = 2; lc <= 16; ++lc) {
    for (int trial = 0; trial < 500; ++trial) {
      const auto r = static_cast<std::uint8_t>(rng()), g = static_cast<std::uint8_t>(rng()),
                 b = static_cast<std::uint8_t>(rng());
      const std::uint16_t code = quantize_pixel(r, g, b, lc);
      const auto rgb = dequantize_code(code, lc);
      auto byte = [](double v) { return static_cast<std::uint8_t>(std::lround(v * 255.0)); };
      REQUIRE(quantize_pixel(byte(rgb[0]), byte(rgb[1]), byte(rgb[2]), lc) == code);
      REQUIRE(encode_normalized(rgb, lc) == code);
    }
  }
}

TEST_CASE("assemble_rgbp") {
  RawFrame rgb = filled(6, 4, 9, 8, 7);
  const RgbpFrame f = assemble_rgbp(rgb, PChannel(6, 4));
  CHECK(f.p.count() == 0);
  CHECK(f.rgb.pixels == rgb.pixels);
  CHECK_THROWS_AS(assemble_rgbp(rgb, PChannel(5, 4)), InvalidFrameError);
  PChannel bad(6, 4);
  bad.bits[3] = 2;
  CHECK_THROWS_AS(assemble_rgbp(rgb, bad), InvalidFrameError);
}

TEST_CASE("window") {
  SUBCASE("T=9, stride=5 first fills at raw index 40") {
    SequenceWindow w(9, 5);
    std::optional<RgbpSequence> first;
    std::int64_t at = -1;
    for (std::int64_t i = 0; i < 60 && !first; ++i) {
      first = w.push(rgbp_at(i));
      at = i;
    }
    REQUIRE(first);
    CHECK(at == 40);
    CHECK(first->frames.front().index() == 0);
    CHECK(first->frames.back().index() == 40);
    for (std::size_t k = 1; k < first->frames.size(); ++k)
      CHECK(first->frames[k].index() - first->frames[k - 1].index() == 5);
  }
  SUBCASE("T=1, stride=1 emits every frame") {
    SequenceWindow w(1, 1);
    for (std::int64_t i = 0; i < 10; ++i) {
      auto s = w.push(rgbp_at(i));
      REQUIRE(s);
      CHECK(s->frames.size() == 1);
      CHECK(s->frames[0].index() == i);
    }
  }
  SUBCASE("50 raw frames give sequences ending at 40 and 45") {
    SequenceWindow w(9, 5);
    std::vector<std::int64_t> ends;
    for (std::int64_t i = 0; i < 50; ++i)
      if (auto s = w.push(rgbp_at(i))) ends.push_back(s->frames.back().index());
    CHECK(ends == std::vector<std::int64_t>{40, 45});
  }
  SUBCASE("output count formula") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = static_cast<int>(rng() % 120);
      const int T = 1 + static_cast<int>(rng() % 10);
      const int stride = 1 + static_cast<int>(rng() % 7);
      SequenceWindow w(T, stride);
      std::size_t emitted = 0;
      for (int i = 0; i < n; ++i) emitted += w.push(rgbp_at(i)).has_value();
      const std::int64_t formula = n == 0 ? 0 : std::max<std::int64_t>(0, (n - 1) / stride - T + 2);
      REQUIRE(emitted == static_cast<std::size_t>(formula));
      REQUIRE(expected_window_count(n, T, stride) == emitted);
    }
  }
  SUBCASE("a gap in kept frames restarts the window") {
    SequenceWindow w(3, 1);
    CHECK_FALSE(w.push(rgbp_at(0)));
    CHECK_FALSE(w.push(rgbp_at(1)));
    CHECK_FALSE(w.push(rgbp_at(3)));
    CHECK_FALSE(w.push(rgbp_at(4)));
    CHECK(w.push(rgbp_at(5)));
  }
  SUBCASE("bad parameters") {
    CHECK_THROWS_AS(SequenceWindow(0, 1), ConfigError);
    CHECK_THROWS_AS(SequenceWindow(1, 0), ConfigError);
  }
}

TEST_CASE("to_tensor scales RGB to [0,1] and keeps P binary") {
  RawFrame rgb = filled(2, 2, 255, 0, 51);
  PChannel p(2, 2);
  p.bits[1] = 1;
  const auto t = to_tensor<float>(assemble_rgbp(rgb, p));
  CHECK(t.shape == Shape3{4, 2, 2});
  CHECK(t.at(0, 0, 0) == doctest::Approx(1.0));
  CHECK(t.at(1, 1, 1) == 0.0f);
  CHECK(t.at(2, 0, 1) == doctest::Approx(0.2));
  CHECK(t.at(3, 0, 1) == 1.0f);
  CHECK(t.at(3, 0, 0) == 0.0f);
}
