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
#include "pcount/background_model.hpp"
#include "pcount/errors.hpp"

using namespace pcount;

namespace {

QuantizedFrame constant(FrameSize size, int lc, std::uint16_t code) {
  QuantizedFrame q;
  q.width = size.width;
  q.height = size.height;
  q.lambda_c = lc;
  q.codes.assign(size.pixels(), code);
  return q;
}

}  // namespace

TEST_CASE("mode_of") {
  const std::vector<std::uint16_t> h{0, 3, 1, 3, 0};
  CHECK(mode_of(h) == 1);
  const std::vector<std::uint16_t> single{0, 0, 7};
  CHECK(mode_of(single) == 2);
  CHECK_THROWS_AS(mode_of(std::span<const std::uint16_t>{}), RangeError);

  std::mt19937 rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::uint16_t> hist(1 + rng() % 64);
    for (auto& v : hist) v = static_cast<std::uint16_t>(rng() % 5);
    hist[rng() % hist.size()] += 1;
    std::size_t best = 0;
    for (std::size_t i = 0; i < hist.size(); ++i)
      if (hist[i] > hist[best]) best = i;
    REQUIRE(mode_of(hist) == best);
  }
}

TEST_CASE("gate boundary") {
  CHECK(gate_count(0.8, 100) == 80);
  CHECK(gate_count(1.0, 10) == 10);
  CHECK(gate_count(0.6, 5) == 3);
  std::vector<std::uint16_t> h(64, 0);
  h[5] = 80;
  h[9] = 20;
  CHECK(update_pixel(h, 9, 0.8, 100) == 5);
  h[5] = 79;
  h[9] = 21;
  CHECK(update_pixel(h, 9, 0.8, 100) == 9);
}

TEST_CASE("construction checks") {
  CHECK_THROWS_AS(BackgroundModel({4, 4}, 4, 0, 0.8), ConfigError);
  CHECK_THROWS_AS(BackgroundModel({4, 4}, 4, 10, 0.0), ConfigError);
  CHECK_THROWS_AS(BackgroundModel({4, 4}, 4, 10, 1.5), ConfigError);
  CHECK_THROWS_AS(BackgroundModel({4, 4}, 1, 10, 0.8), ConfigError);
  BackgroundModel m({4, 4}, 4, 10, 0.8);
  CHECK_THROWS_AS(m.ingest(constant({5, 4}, 4, 0)), InvalidFrameError);
  CHECK_THROWS_AS(m.ingest(constant({4, 4}, 3, 0)), InvalidFrameError);
}

TEST_CASE("initialization and static scene") {
  const FrameSize size{6, 5};
  BackgroundModel m(size, 4, 100, 0.8);
  const auto q = constant(size, 4, 21);
  CHECK_THROWS_AS((void)m.foreground(q), NotReadyError);
  for (int i = 0; i < 99; ++i) m.ingest(q);
  CHECK_FALSE(m.initialized());
  CHECK_FALSE(m.snapshot().initialized);
  m.ingest(q);
  REQUIRE(m.initialized());
  CHECK(m.background().codes == q.codes);
  CHECK(m.foreground(q).count() == 0);

  auto q2 = q;
  q2.codes[7] = 63;
  m.ingest(q2);
  CHECK(m.background().codes == q.codes);
  CHECK(m.histogram(1, 1)[63] == 1);
  CHECK(m.histogram(1, 1)[21] == 99);
}

TEST_CASE("snapshot is a copy") {
  const FrameSize size{3, 3};
  BackgroundModel m(size, 2, 3, 1.0);
  for (int i = 0; i < 3; ++i) m.ingest(constant(size, 2, 1));
  const BackgroundSnapshot snap = m.snapshot();
  for (int i = 0; i < 3; ++i) m.ingest(constant(size, 2, 6));
  CHECK(m.background().codes[0] == 6);
  CHECK(snap.background.codes[0] == 1);
  CHECK(snap.initialized);
}

TEST_CASE("incremental model equals batch recount") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const FrameSize size{8, 8};
    const int lc = 2 + static_cast<int>(rng() % 3);
    const int eta = 5 + static_cast<int>(rng() % 16);
    const double tau = std::array{0.6, 0.8, 1.0}[rng() % 3];
    const int lambda = lc * lc * lc;
    BackgroundModel m(size, lc, eta, tau);
    oracle::BatchBackground batch(size.pixels(), lambda, eta, tau);
    // a few dominant codes per pixel so the gate actually fires
    std::vector<std::uint16_t> base(size.pixels());
    for (auto& b : base) b = static_cast<std::uint16_t>(rng() % lambda);
    const int steps = 3 * eta + static_cast<int>(rng() % 40);
    for (int s = 0; s < steps; ++s) {
      if (rng() % 13 == 0)
        for (auto& b : base) b = static_cast<std::uint16_t>(rng() % lambda);
      QuantizedFrame q = constant(size, lc, 0);
      for (std::size_t p = 0; p < q.codes.size(); ++p)
        q.codes[p] = rng() % 4 == 0 ? static_cast<std::uint16_t>(rng() % lambda) : base[p];
      m.ingest(q);
      batch.ingest(q.codes);
      REQUIRE(std::vector<std::uint16_t>(m.histograms().begin(), m.histograms().end()) == batch.histograms());
      REQUIRE(m.initialized() == batch.initialized());
      if (batch.initialized()) REQUIRE(m.background().codes == batch.background());
    }
  }
}

TEST_CASE("histogram mass equals frames held") {
  std::mt19937 rng(9);
  const FrameSize size{5, 4};
  BackgroundModel m(size, 3, 12, 0.8);
  for (int s = 0; s < 40; ++s) {
    QuantizedFrame q = constant(size, 3, 0);
    for (auto& c : q.codes) c = static_cast<std::uint16_t>(rng() % 27);
    m.ingest(q);
    const std::size_t held = std::min<std::size_t>(s + 1, 12);
    REQUIRE(m.ring_size() == held);
    for (int y = 0; y < size.height; ++y)
      for (int x = 0; x < size.width; ++x) {
        std::size_t total = 0;
        for (auto v : m.histogram(x, y)) total += v;
        REQUIRE(total == held);
      }
  }
  const auto ring = m.ring();
  REQUIRE(ring.size() == 12);
}

TEST_CASE("moved furniture enters the background after exactly the gate count") {
  const FrameSize size{2, 2};
  BackgroundModel m(size, 4, 100, 0.8);
  for (int i = 0; i < 100; ++i) m.ingest(constant(size, 4, 10));
  int flipped_at = -1;
  for (int k = 1; k <= 100; ++k) {
    m.ingest(constant(size, 4, 50));
    if (flipped_at < 0 && m.background().codes[0] == 50) flipped_at = k;
  }
  CHECK(flipped_at == 80);
}

TEST_CASE("a brief stop does not enter the background") {
  const FrameSize size{2, 2};
  BackgroundModel m(size, 4, 100, 0.8);
  for (int i = 0; i < 100; ++i) m.ingest(constant(size, 4, 10));
  for (int k = 0; k < 79; ++k) m.ingest(constant(size, 4, 50));
  CHECK(m.background().codes[0] == 10);
  for (int k = 0; k < 200; ++k) {
    m.ingest(constant(size, 4, 10));
    REQUIRE(m.background().codes[0] == 10);
  }
}

TEST_CASE("foreground threshold") {
  const FrameSize size{3, 1};
  BackgroundModel m(size, 4, 2, 1.0);
  m.ingest(constant(size, 4, 0));
  m.ingest(constant(size, 4, 0));
  QuantizedFrame q = constant(size, 4, 0);
  q.codes[0] = 63;  // white on black
  q.codes[1] = 1;   // one blue bin: 0.114 / 3 below beta
  q.codes[2] = 4;   // one green bin: 0.587 / 3 above beta
  const PChannel p = m.foreground(q);
  CHECK(p.bits == std::vector<std::uint8_t>{1, 0, 1});
  ForegroundParams strict;
  strict.beta = 0.01;
  CHECK(m.foreground(q, strict).bits == std::vector<std::uint8_t>{1, 1, 1});
  CHECK_THROWS_AS((void)m.foreground(constant({2, 2}, 4, 0)), InvalidFrameError);
}

TEST_CASE("preprocess resamples then quantizes") {
  RawFrame f(800, 450);
  std::fill(f.pixels.begin(), f.pixels.end(), 255);
  const QuantizedFrame q = preprocess(f, {}, 4);
  CHECK(q.width == 400);
  CHECK(q.height == 225);
  for (auto c : q.codes) REQUIRE(c == 63);
}
