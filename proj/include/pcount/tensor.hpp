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

#include <cstddef>
#include <span>
#include <vector>

namespace pcount {

struct Shape3 {
  int channels = 0;
  int height = 0;
  int width = 0;

  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
  [[nodiscard]] std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

/// Planar (channel, row, column) tensor.
template <typename Real>
struct Tensor3 {
  Shape3 shape;
  std::vector<Real> data;

  Tensor3() = default;
  explicit Tensor3(Shape3 s, Real fill = Real(0)) : shape(s), data(s.size(), fill) {}

  Real& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * shape.height + y) * shape.width + x];
  }
  const Real& at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * shape.height + y) * shape.width + x];
  }
  std::span<Real> span() { return data; }
  std::span<const Real> span() const { return data; }
};

/// A sequence of frames handed to a model, oldest first. Frames are borrowed.
template <typename Real>
using FrameSpan = std::span<const Tensor3<Real>* const>;

}  // namespace pcount
