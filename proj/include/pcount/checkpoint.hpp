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

// Model checkpoint container:
//
//   "LRCN"                          4-byte magic
//   u32 version                     currently 1
//   u32 n, n bytes                  JSON config, with "model": "lrcn" | "retailnet"
//   u32 group count
//   per group:
//     u32 n, n bytes                name
//     u32 rank, rank x u32          shape
//     prod(shape) x f32             values, row-major
//
// All integers and floats little-endian.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "pcount/lrcn.hpp"
#include "pcount/retailnet.hpp"

namespace pcount {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointData {
  std::string model;        // "lrcn" or "retailnet"
  std::string config_json;  // model config without the "model" key
  std::vector<ParamGroup<float>> groups;
};

void write_checkpoint(std::ostream& out, const CheckpointData& data);
CheckpointData read_checkpoint(std::istream& in);

using AnyModel = std::variant<LrcnModel<float>, RetailNetModel<float>>;

void save_model(const std::filesystem::path& path, const LrcnModel<float>& model);
void save_model(const std::filesystem::path& path, const RetailNetModel<float>& model);
AnyModel load_model(const std::filesystem::path& path);
/// Throws ConfigError when the file holds a different model kind.
LrcnModel<float> load_lrcn(const std::filesystem::path& path);

/// Conv weights of either model kind.
ConvWeights<float> conv_weights_of(const AnyModel& model);

}  // namespace pcount
