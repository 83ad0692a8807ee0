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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcount/frame.hpp"
#include "pcount/label.hpp"

namespace pcount {

// RGBP binary frame: "RGBP", u8 version, u16 LE width, u16 LE height, then
// row-major R,G,B,P bytes with P stored as 0 or 255.
inline constexpr std::uint8_t kRgbpVersion = 1;
inline constexpr std::size_t kRgbpHeaderBytes = 10;

std::vector<std::uint8_t> encode_rgbp(const RgbpFrame& frame);
RgbpFrame decode_rgbp(const std::vector<std::uint8_t>& bytes);
void write_rgbp(const std::filesystem::path& path, const RgbpFrame& frame);
RgbpFrame read_rgbp(const std::filesystem::path& path);

struct LabelRow {
  std::int64_t frame_id = 0;
  std::int64_t timestamp_ms = 0;
  PeopleLabel label;

  friend bool operator==(const LabelRow&, const LabelRow&) = default;
};

struct LabelTable {
  std::vector<LabelRow> rows;

  /// Throws InvariantError unless ids ascend strictly, counts are
  /// non-negative and customers never exceed people.
  void validate() const;
  [[nodiscard]] const LabelRow* find(std::int64_t frame_id) const;
  [[nodiscard]] bool has_customer_labels() const;
  friend bool operator==(const LabelTable&, const LabelTable&) = default;
};

std::string format_label_table(const LabelTable& table);
LabelTable parse_label_table(const std::string& text);
void write_label_table(const std::filesystem::path& path, const LabelTable& table);
LabelTable read_label_table(const std::filesystem::path& path);

/// Fills in customer counts; people counts are never touched.
LabelTable relabel_customers(const LabelTable& table, const std::map<std::int64_t, std::int64_t>& edits);

struct ManifestEntry {
  std::string id;
  std::string video;
  std::vector<std::string> frames;  // relative to the manifest root
  PeopleLabel label;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct SequenceManifest {
  std::string dataset_id;
  std::string root;
  int stride = kDefaultStride;
  int seq_len = 9;
  std::vector<ManifestEntry> sequences;

  void validate() const;
  friend bool operator==(const SequenceManifest&, const SequenceManifest&) = default;
};

std::string format_manifest(const SequenceManifest& manifest);
SequenceManifest parse_manifest(const std::string& text);
void write_manifest(const std::filesystem::path& path, const SequenceManifest& manifest);
SequenceManifest read_manifest(const std::filesystem::path& path);

/// Builds labelled windows from root/videos/<video>/frames/<frame_id>.rgbp and
/// root/videos/<video>/labels.csv. Frame ids inside one video must be
/// consecutive (every stride-th one is kept) or spaced exactly by stride.
SequenceManifest import_dataset(const std::filesystem::path& root, int stride, int seq_len);

/// Count value -> number of sequences carrying it.
std::map<std::int64_t, std::size_t> label_distribution(const SequenceManifest& manifest,
                                                       LabelMode mode = LabelMode::all_people);

/// Loads the frames of one manifest entry.
std::vector<RgbpFrame> load_sequence(const SequenceManifest& manifest, const ManifestEntry& entry);

// Binary PPM (P6) and PGM (P5) with maxval 255. A PGM read as RGB is
// replicated to three channels.
RawFrame read_pnm(const std::filesystem::path& path);
/// Next image of a concatenated PPM/PGM stream; nullopt at a clean end of input.
std::optional<RawFrame> read_pnm(std::istream& in, const std::string& name = "stream");
void write_ppm(const std::filesystem::path& path, const RawFrame& frame);
void write_pgm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& gray);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace pcount
