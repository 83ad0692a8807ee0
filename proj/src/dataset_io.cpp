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
#include "pcount/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "pcount/errors.hpp"

namespace fs = std::filesystem;

namespace pcount {

namespace {

void put_u16(std::vector<std::uint8_t>& out, int v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

std::int64_t parse_int(std::string_view s, const char* what) {
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty())
    throw FormatError(std::string("bad ") + what + ": '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::int64_t frame_id_of(const std::string& path) {
  return parse_int(fs::path(path).stem().string(), "frame id");
}

}  // namespace

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path.string());
}

std::vector<std::uint8_t> encode_rgbp(const RgbpFrame& frame) {
  frame.rgb.validate();
  if (frame.p.size() != frame.rgb.size() || frame.p.bits.size() != frame.rgb.size().pixels())
    throw InvalidFrameError("P channel size differs from RGB");
  if (frame.rgb.width > 0xffff || frame.rgb.height > 0xffff)
    throw InvalidFrameError("frame too large for the RGBP header");
  std::vector<std::uint8_t> out{'R', 'G', 'B', 'P', kRgbpVersion};
  put_u16(out, frame.rgb.width);
  put_u16(out, frame.rgb.height);
  const std::size_t n = frame.rgb.size().pixels();
  out.resize(kRgbpHeaderBytes + n * 4);
  std::uint8_t* dst = out.data() + kRgbpHeaderBytes;
  for (std::size_t i = 0; i < n; ++i) {
    dst[i * 4] = frame.rgb.pixels[i * 3];
    dst[i * 4 + 1] = frame.rgb.pixels[i * 3 + 1];
    dst[i * 4 + 2] = frame.rgb.pixels[i * 3 + 2];
    dst[i * 4 + 3] = frame.p.bits[i] ? 255 : 0;
  }
  return out;
}

RgbpFrame decode_rgbp(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kRgbpHeaderBytes || std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) != "RGBP")
    throw FormatError("bad RGBP magic");
  if (bytes[4] != kRgbpVersion) throw FormatError("unsupported RGBP version " + std::to_string(bytes[4]));
  const int w = bytes[5] | (bytes[6] << 8);
  const int h = bytes[7] | (bytes[8] << 8);
  if (w == 0 || h == 0) throw FormatError("RGBP frame with zero dimension");
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() != kRgbpHeaderBytes + n * 4)
    throw FormatError("RGBP payload is " + std::to_string(bytes.size() - kRgbpHeaderBytes) + " bytes, expected " +
                      std::to_string(n * 4));
  RgbpFrame f{RawFrame(w, h), PChannel(w, h)};
  const std::uint8_t* src = bytes.data() + kRgbpHeaderBytes;
  for (std::size_t i = 0; i < n; ++i) {
    f.rgb.pixels[i * 3] = src[i * 4];
    f.rgb.pixels[i * 3 + 1] = src[i * 4 + 1];
    f.rgb.pixels[i * 3 + 2] = src[i * 4 + 2];
    const std::uint8_t p = src[i * 4 + 3];
    if (p != 0 && p != 255) throw FormatError("P byte must be 0 or 255, found " + std::to_string(p));
    f.p.bits[i] = p ? 1 : 0;
  }
  return f;
}

void write_rgbp(const fs::path& path, const RgbpFrame& frame) { write_file(path, encode_rgbp(frame)); }

RgbpFrame read_rgbp(const fs::path& path) { return decode_rgbp(read_file(path)); }

void LabelTable::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (i > 0 && r.frame_id <= rows[i - 1].frame_id)
      throw InvariantError("frame ids must be unique and ascending (at " + std::to_string(r.frame_id) + ")");
    if (r.label.total_count < 0) throw InvariantError("negative people count");
    if (r.label.customer_count) {
      if (*r.label.customer_count < 0) throw InvariantError("negative customer count");
      if (*r.label.customer_count > r.label.total_count)
        throw InvariantError("customer count exceeds people count at frame " + std::to_string(r.frame_id));
    }
  }
}

const LabelRow* LabelTable::find(std::int64_t frame_id) const {
  auto it = std::lower_bound(rows.begin(), rows.end(), frame_id,
                             [](const LabelRow& r, std::int64_t id) { return r.frame_id < id; });
  return it != rows.end() && it->frame_id == frame_id ? &*it : nullptr;
}

bool LabelTable::has_customer_labels() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const LabelRow& r) {
    return r.label.customer_count.has_value();
  });
}

static constexpr std::string_view kLabelHeader = "frame_id,timestamp_ms,people_count,customer_count";

std::string format_label_table(const LabelTable& table) {
  table.validate();
  std::string out(kLabelHeader);
  out += '\n';
  for (const auto& r : table.rows) {
    out += std::to_string(r.frame_id) + ',' + std::to_string(r.timestamp_ms) + ',' +
           std::to_string(r.label.total_count) + ',';
    if (r.label.customer_count) out += std::to_string(*r.label.customer_count);
    out += '\n';
  }
  return out;
}

LabelTable parse_label_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || line != kLabelHeader) throw FormatError("label table header must be '" + std::string(kLabelHeader) + "'");
  LabelTable table;
  while (next()) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 4) throw FormatError("label row needs 4 fields: '" + line + "'");
    LabelRow r;
    r.frame_id = parse_int(f[0], "frame_id");
    r.timestamp_ms = parse_int(f[1], "timestamp_ms");
    r.label.total_count = parse_int(f[2], "people_count");
    if (!f[3].empty()) r.label.customer_count = parse_int(f[3], "customer_count");
    table.rows.push_back(r);
  }
  table.validate();
  return table;
}

void write_label_table(const fs::path& path, const LabelTable& table) {
  const std::string text = format_label_table(table);
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

LabelTable read_label_table(const fs::path& path) {
  const auto bytes = read_file(path);
  return parse_label_table(std::string(bytes.begin(), bytes.end()));
}

LabelTable relabel_customers(const LabelTable& table, const std::map<std::int64_t, std::int64_t>& edits) {
  LabelTable out = table;
  for (auto [id, customers] : edits) {
    auto it = std::find_if(out.rows.begin(), out.rows.end(), [id](const LabelRow& r) { return r.frame_id == id; });
    if (it == out.rows.end()) throw InvariantError("no label row for frame " + std::to_string(id));
    if (customers < 0 || customers > it->label.total_count)
      throw InvariantError("customer count " + std::to_string(customers) + " outside [0, " +
                           std::to_string(it->label.total_count) + "] at frame " + std::to_string(id));
    it->label.customer_count = customers;
  }
  return out;
}

void SequenceManifest::validate() const {
  if (stride < 1 || seq_len < 1) throw ConfigError("manifest stride and T must be >= 1");
  for (const auto& s : sequences) {
    if (static_cast<int>(s.frames.size()) != seq_len)
      throw InvariantError("sequence " + s.id + " lists " + std::to_string(s.frames.size()) + " frames, expected " +
                           std::to_string(seq_len));
    for (std::size_t i = 1; i < s.frames.size(); ++i)
      if (frame_id_of(s.frames[i]) - frame_id_of(s.frames[i - 1]) != stride)
        throw InvariantError("sequence " + s.id + " frame spacing differs from stride");
    if (s.label.total_count < 0 || (s.label.customer_count && (*s.label.customer_count < 0 ||
                                                              *s.label.customer_count > s.label.total_count)))
      throw InvariantError("sequence " + s.id + " has an invalid label");
  }
}

std::string format_manifest(const SequenceManifest& m) {
  m.validate();
  nlohmann::ordered_json j;
  j["dataset_id"] = m.dataset_id;
  j["root"] = m.root;
  j["stride"] = m.stride;
  j["seq_len"] = m.seq_len;
  auto seqs = nlohmann::ordered_json::array();
  for (const auto& s : m.sequences) {
    nlohmann::ordered_json e;
    e["id"] = s.id;
    e["video"] = s.video;
    e["frames"] = s.frames;
    e["people_count"] = s.label.total_count;
    e["customer_count"] = s.label.customer_count ? nlohmann::ordered_json(*s.label.customer_count) : nullptr;
    seqs.push_back(std::move(e));
  }
  j["sequences"] = std::move(seqs);
  return j.dump(1) + "\n";
}

SequenceManifest parse_manifest(const std::string& text) {
  SequenceManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.dataset_id = j.at("dataset_id").get<std::string>();
    m.root = j.at("root").get<std::string>();
    m.stride = j.at("stride").get<int>();
    m.seq_len = j.at("seq_len").get<int>();
    for (const auto& e : j.at("sequences")) {
      ManifestEntry s;
      s.id = e.at("id").get<std::string>();
      s.video = e.at("video").get<std::string>();
      s.frames = e.at("frames").get<std::vector<std::string>>();
      s.label.total_count = e.at("people_count").get<std::int64_t>();
      if (!e.at("customer_count").is_null()) s.label.customer_count = e.at("customer_count").get<std::int64_t>();
      m.sequences.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed manifest: ") + ex.what());
  }
  m.validate();
  return m;
}

void write_manifest(const fs::path& path, const SequenceManifest& m) {
  const std::string text = format_manifest(m);
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

SequenceManifest read_manifest(const fs::path& path) {
  const auto bytes = read_file(path);
  return parse_manifest(std::string(bytes.begin(), bytes.end()));
}

SequenceManifest import_dataset(const fs::path& root, int stride, int seq_len) {
  if (stride < 1 || seq_len < 1) throw ConfigError("stride and T must be >= 1");
  const fs::path videos = root / "videos";
  if (!fs::is_directory(videos)) throw IoError("missing directory " + videos.string());

  std::vector<std::string> names;
  for (const auto& d : fs::directory_iterator(videos))
    if (d.is_directory()) names.push_back(d.path().filename().string());
  std::sort(names.begin(), names.end());

  SequenceManifest m;
  m.dataset_id = root.filename().empty() ? root.parent_path().filename().string() : root.filename().string();
  m.root = root.string();
  m.stride = stride;
  m.seq_len = seq_len;

  for (const auto& video : names) {
    const fs::path dir = videos / video;
    const fs::path labels_path = dir / "labels.csv";
    if (!fs::exists(labels_path)) throw InvariantError("video " + video + " has no labels.csv");
    const LabelTable labels = read_label_table(labels_path);

    std::vector<std::pair<std::int64_t, std::string>> frames;
    if (fs::is_directory(dir / "frames"))
      for (const auto& f : fs::directory_iterator(dir / "frames"))
        if (f.path().extension() == ".rgbp")
          frames.emplace_back(parse_int(f.path().stem().string(), "frame file name"),
                              "videos/" + video + "/frames/" + f.path().filename().string());
    std::sort(frames.begin(), frames.end());

    // consecutive raw ids are subsampled; ids already spaced by stride are kept as-is
    std::int64_t step = 0;
    for (std::size_t i = 1; i < frames.size(); ++i) {
      const std::int64_t d = frames[i].first - frames[i - 1].first;
      if (i == 1) step = d;
      if (d != step || (d != 1 && d != stride))
        throw FormatError("video " + video + ": non-contiguous frame ids near " + std::to_string(frames[i].first));
    }
    std::vector<std::pair<std::int64_t, std::string>> kept;
    for (const auto& f : frames)
      if (step != 1 || (f.first - frames.front().first) % stride == 0) kept.push_back(f);

    for (std::size_t end = seq_len - 1; end < kept.size(); ++end) {
      ManifestEntry e;
      e.video = video;
      e.id = video + ":" + std::to_string(kept[end].first);
      for (std::size_t k = end + 1 - seq_len; k <= end; ++k) e.frames.push_back(kept[k].second);
      const LabelRow* row = labels.find(kept[end].first);
      if (!row) throw InvariantError("video " + video + ": no label for frame " + std::to_string(kept[end].first));
      e.label = row->label;
      m.sequences.push_back(std::move(e));
    }
  }
  m.validate();
  return m;
}

std::map<std::int64_t, std::size_t> label_distribution(const SequenceManifest& manifest, LabelMode mode) {
  std::map<std::int64_t, std::size_t> out;
  for (const auto& s : manifest.sequences) ++out[target_count(s.label, mode)];
  return out;
}

std::vector<RgbpFrame> load_sequence(const SequenceManifest& manifest, const ManifestEntry& entry) {
  std::vector<RgbpFrame> frames;
  frames.reserve(entry.frames.size());
  for (const auto& rel : entry.frames) {
    RgbpFrame f = read_rgbp(fs::path(manifest.root) / rel);
    f.rgb.index = frame_id_of(rel);
    frames.push_back(std::move(f));
  }
  return frames;
}

std::optional<RawFrame> read_pnm(std::istream& in, const std::string& name) {
  auto skip = [&]() {
    for (;;) {
      while (in && std::isspace(in.peek())) in.get();
      if (in.peek() != '#') return;
      while (in && in.get() != '\n') {
      }
    }
  };
  skip();
  if (in.peek() == std::char_traits<char>::eof()) return std::nullopt;
  auto token = [&]() {
    skip();
    std::string t;
    while (in && in.peek() != std::char_traits<char>::eof() && !std::isspace(in.peek())) t.push_back(static_cast<char>(in.get()));
    if (t.empty()) throw FormatError("truncated image header in " + name);
    return t;
  };
  const std::string magic = token();
  if (magic != "P6" && magic != "P5") throw FormatError(name + " is not a binary PPM/PGM");
  const int w = static_cast<int>(parse_int(token(), "image width"));
  const int h = static_cast<int>(parse_int(token(), "image height"));
  const int maxval = static_cast<int>(parse_int(token(), "image maxval"));
  if (w <= 0 || h <= 0 || maxval != 255) throw FormatError(name + ": unsupported image geometry or depth");
  in.get();  // single whitespace before the raster
  const int channels = magic == "P6" ? 3 : 1;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<char> raster(n * channels);
  if (!in.read(raster.data(), static_cast<std::streamsize>(raster.size()))) throw FormatError(name + ": truncated raster");
  RawFrame f(w, h);
  if (channels == 3) {
    std::copy(raster.begin(), raster.end(), f.pixels.begin());
  } else {
    for (std::size_t i = 0; i < n; ++i)
      f.pixels[i * 3] = f.pixels[i * 3 + 1] = f.pixels[i * 3 + 2] = static_cast<std::uint8_t>(raster[i]);
  }
  return f;
}

RawFrame read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  auto f = read_pnm(in, path.string());
  if (!f) throw FormatError("truncated image header in " + path.string());
  return std::move(*f);
}

void write_ppm(const fs::path& path, const RawFrame& frame) {
  frame.validate();
  const std::string header = "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), frame.pixels.begin(), frame.pixels.end());
  write_file(path, out);
}

void write_pgm(const fs::path& path, int width, int height, const std::vector<std::uint8_t>& gray) {
  if (width <= 0 || height <= 0 || gray.size() != static_cast<std::size_t>(width) * height)
    throw InvalidFrameError("PGM buffer does not match its dimensions");
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), gray.begin(), gray.end());
  write_file(path, out);
}

}  // namespace pcount
