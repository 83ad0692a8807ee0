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
#include "pcount/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>

#include "pcount/errors.hpp"

namespace pcount {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("checkpoint truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, std::uint32_t limit) {
  const std::uint32_t n = get_u32(in);
  if (n > limit) throw FormatError("checkpoint string length out of range");
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw FormatError("checkpoint truncated");
  return s;
}

template <typename Real>
std::vector<ParamGroup<float>> to_float(const std::vector<ParamGroup<Real>>& groups) {
  std::vector<ParamGroup<float>> out;
  for (const auto& g : groups) {
    ParamGroup<float> f{g.name, g.shape, std::vector<float>(g.values.begin(), g.values.end()), g.trainable};
    out.push_back(std::move(f));
  }
  return out;
}

std::string with_kind(const std::string& config_json, const std::string& kind) {
  auto j = nlohmann::json::parse(config_json);
  j["model"] = kind;
  return j.dump();
}

void save(const std::filesystem::path& path, const CheckpointData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, data);
  if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace

void write_checkpoint(std::ostream& out, const CheckpointData& data) {
  out.write("LRCN", 4);
  put_u32(out, kCheckpointVersion);
  put_string(out, with_kind(data.config_json, data.model));
  put_u32(out, static_cast<std::uint32_t>(data.groups.size()));
  for (const auto& g : data.groups) {
    put_string(out, g.name);
    put_u32(out, static_cast<std::uint32_t>(g.shape.size()));
    for (int d : g.shape) put_u32(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(g.values.data()),
              static_cast<std::streamsize>(g.values.size() * sizeof(float)));
  }
}

CheckpointData read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "LRCN", 4) != 0) throw FormatError("not a checkpoint (bad magic)");
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  CheckpointData data;
  try {
    auto j = nlohmann::json::parse(get_string(in, 1u << 20));
    data.model = j.at("model").get<std::string>();
    j.erase("model");
    data.config_json = j.dump();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad checkpoint config: ") + e.what());
  }
  const std::uint32_t groups = get_u32(in);
  if (groups > 4096) throw FormatError("checkpoint group count out of range");
  for (std::uint32_t i = 0; i < groups; ++i) {
    ParamGroup<float> g;
    g.name = get_string(in, 256);
    const std::uint32_t rank = get_u32(in);
    if (rank > 8) throw FormatError("checkpoint tensor rank out of range");
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const std::uint32_t dim = get_u32(in);
      g.shape.push_back(static_cast<int>(dim));
      n *= dim;
    }
    if (n > (std::size_t{1} << 31)) throw FormatError("checkpoint tensor too large");
    g.values.resize(n);
    if (!in.read(reinterpret_cast<char*>(g.values.data()), static_cast<std::streamsize>(n * sizeof(float)))) {
      throw FormatError("checkpoint truncated in group '" + g.name + "'");
    }
    data.groups.push_back(std::move(g));
  }
  return data;
}

void save_model(const std::filesystem::path& path, const LrcnModel<float>& model) {
  save(path, CheckpointData{"lrcn", serialize(model.config()), to_float(model.params())});
}

void save_model(const std::filesystem::path& path, const RetailNetModel<float>& model) {
  save(path, CheckpointData{"retailnet", serialize(model.config()), to_float(model.params())});
}

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  CheckpointData data = read_checkpoint(in);
  if (data.model == "lrcn") {
    const LrcnConfig config = parse_lrcn_config(data.config_json);
    auto m = LrcnModel<float>::from_params(config, std::move(data.groups));
    m.set_conv_frozen(config.conv_frozen);
    return m;
  }
  if (data.model == "retailnet") {
    return RetailNetModel<float>::from_params(parse_retailnet_config(data.config_json), std::move(data.groups));
  }
  throw FormatError("unknown model kind '" + data.model + "'");
}

LrcnModel<float> load_lrcn(const std::filesystem::path& path) {
  AnyModel m = load_model(path);
  if (auto* lrcn = std::get_if<LrcnModel<float>>(&m)) return std::move(*lrcn);
  throw ConfigError(path.string() + " holds a RetailNet checkpoint, expected an LRCN one");
}

ConvWeights<float> conv_weights_of(const AnyModel& model) {
  return std::visit([](const auto& m) { return m.conv_weights(); }, model);
}

}  // namespace pcount
