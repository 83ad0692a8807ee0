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
#include "pcount/annotation.hpp"

#include <algorithm>
#include <json.hpp>

#include "pcount/errors.hpp"

namespace fs = std::filesystem;

namespace pcount {

AnnotationSession::AnnotationSession(std::string video_id, std::int64_t frame_count, LabelMode mode)
    : video_id_(std::move(video_id)), frame_count_(frame_count), mode_(mode) {
  if (frame_count < 1) throw RangeError("a session needs at least one frame");
}

void AnnotationSession::check_non_negative(std::optional<std::int64_t> initial) const {
  if (!initial) return;
  std::vector<std::int64_t> delta(static_cast<std::size_t>(frame_count_), 0);
  for (const auto& e : log_) delta[static_cast<std::size_t>(e.frame)] += e.delta;
  std::int64_t running = *initial;
  for (std::size_t k = 0; k < delta.size(); ++k)
    if ((running += delta[k]) < 0) throw InvariantError("count would become negative at frame " + std::to_string(k));
}

void AnnotationSession::set_initial(std::int64_t count) {
  if (count < 0) throw InvariantError("initial count must be >= 0");
  check_non_negative(count);
  initial_ = count;
}

void AnnotationSession::adjust(std::int64_t frame, int delta) {
  if (!initial_) throw InvariantError("set the initial count before adjusting");
  if (frame < 0 || frame >= frame_count_) throw RangeError("frame " + std::to_string(frame) + " outside the video");
  if (delta != 1 && delta != -1) throw RangeError("delta must be +1 or -1");
  log_.push_back({frame, delta});
  try {
    check_non_negative(initial_);
  } catch (...) {
    log_.pop_back();
    throw;
  }
}

bool AnnotationSession::undo() {
  if (log_.empty()) return false;
  const AnnotationEvent last = log_.back();
  log_.pop_back();
  try {
    check_non_negative(initial_);
  } catch (...) {
    log_.push_back(last);
    throw;
  }
  return true;
}

std::vector<std::int64_t> AnnotationSession::materialize() const {
  if (!initial_) throw InvariantError("initial count not set");
  std::vector<std::int64_t> delta(static_cast<std::size_t>(frame_count_), 0);
  for (const auto& e : log_) delta[static_cast<std::size_t>(e.frame)] += e.delta;
  std::vector<std::int64_t> out(delta.size());
  std::int64_t running = *initial_;
  for (std::size_t k = 0; k < delta.size(); ++k) out[k] = running += delta[k];
  return out;
}

std::int64_t AnnotationSession::count_at(std::int64_t frame) const {
  if (!initial_) throw InvariantError("initial count not set");
  if (frame < 0 || frame >= frame_count_) throw RangeError("frame " + std::to_string(frame) + " outside the video");
  std::int64_t c = *initial_;
  for (const auto& e : log_)
    if (e.frame <= frame) c += e.delta;
  return c;
}

LabelTable AnnotationSession::export_labels(const std::vector<std::int64_t>& frame_ids,
                                            const std::vector<std::int64_t>& timestamps,
                                            const LabelTable* existing) const {
  if (static_cast<std::int64_t>(frame_ids.size()) != frame_count_ || timestamps.size() != frame_ids.size())
    throw ShapeError("export needs one frame id and timestamp per frame");
  if (mode_ == LabelMode::customers_only && !existing)
    throw InvariantError("customers-only export needs an existing people-count table");
  const auto counts = materialize();
  LabelTable out;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const LabelRow* prev = existing ? existing->find(frame_ids[k]) : nullptr;
    LabelRow row{frame_ids[k], timestamps[k], {}};
    if (mode_ == LabelMode::all_people) {
      row.label.total_count = counts[k];
      if (prev) row.label.customer_count = prev->label.customer_count;
    } else {
      if (!prev) throw InvariantError("no people count for frame " + std::to_string(frame_ids[k]));
      row.label.total_count = prev->label.total_count;
      row.label.customer_count = counts[k];
    }
    out.rows.push_back(row);
  }
  out.validate();
  return out;
}

std::string AnnotationSession::to_json() const {
  nlohmann::ordered_json j;
  j["video"] = video_id_;
  j["frames"] = frame_count_;
  j["mode"] = to_string(mode_);
  j["initial"] = initial_ ? nlohmann::ordered_json(*initial_) : nullptr;
  auto events = nlohmann::ordered_json::array();
  for (const auto& e : log_) events.push_back({e.frame, e.delta});
  j["events"] = std::move(events);
  return j.dump() + "\n";
}

AnnotationSession AnnotationSession::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    AnnotationSession s(j.at("video").get<std::string>(), j.at("frames").get<std::int64_t>(),
                        parse_label_mode(j.at("mode").get<std::string>()));
    if (!j.at("initial").is_null()) s.set_initial(j.at("initial").get<std::int64_t>());
    for (const auto& e : j.at("events")) s.adjust(e.at(0).get<std::int64_t>(), e.at(1).get<int>());
    return s;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("malformed session: ") + ex.what());
  }
}

AnnotationStore::AnnotationStore(fs::path root, int fps) : root_(std::move(root)), fps_(fps) {
  if (fps <= 0) throw ConfigError("fps must be positive");
  if (!fs::is_directory(root_ / "videos")) throw IoError("missing directory " + (root_ / "videos").string());
}

namespace {

bool is_frame_file(const fs::path& p) {
  const auto ext = p.extension();
  return ext == ".ppm" || ext == ".pgm" || ext == ".rgbp";
}

bool safe_name(const std::string& s) {
  return !s.empty() && s != "." && s != ".." && s.find('/') == std::string::npos && s.find('\\') == std::string::npos;
}

std::vector<std::pair<std::int64_t, fs::path>> list_frames(const fs::path& dir) {
  std::vector<std::pair<std::int64_t, fs::path>> frames;
  if (!fs::is_directory(dir)) return frames;
  for (const auto& f : fs::directory_iterator(dir)) {
    if (!is_frame_file(f.path())) continue;
    try {
      frames.emplace_back(std::stoll(f.path().stem().string()), f.path());
    } catch (const std::exception&) {
      throw FormatError("frame file name is not a frame id: " + f.path().string());
    }
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

}  // namespace

std::vector<AnnotationStore::VideoInfo> AnnotationStore::videos() const {
  std::vector<VideoInfo> out;
  for (const auto& d : fs::directory_iterator(root_ / "videos")) {
    if (!d.is_directory()) continue;
    const auto frames = list_frames(d.path() / "frames");
    if (!frames.empty()) out.push_back({d.path().filename().string(), static_cast<std::int64_t>(frames.size())});
  }
  std::sort(out.begin(), out.end(), [](const VideoInfo& a, const VideoInfo& b) { return a.id < b.id; });
  return out;
}

AnnotationStore::Entry& AnnotationStore::entry(const std::string& video) {
  std::lock_guard lock(entries_mutex_);
  if (auto it = entries_.find(video); it != entries_.end()) return *it->second;
  if (!safe_name(video)) throw NotFoundError("unknown video '" + video + "'");
  const fs::path dir = root_ / "videos" / video;
  const auto frames = list_frames(dir / "frames");
  if (frames.empty()) throw NotFoundError("unknown video '" + video + "'");
  auto e = std::make_unique<Entry>();
  for (const auto& [id, path] : frames) {
    e->frame_ids.push_back(id);
    e->frames.push_back(path);
  }
  if (fs::exists(dir / "session.json")) {
    const auto bytes = read_file(dir / "session.json");
    e->session = std::make_unique<AnnotationSession>(AnnotationSession::from_json(std::string(bytes.begin(), bytes.end())));
    if (e->session->frame_count() != static_cast<std::int64_t>(frames.size()) || e->session->video_id() != video)
      throw FormatError("session.json does not match the frames of video '" + video + "'");
  } else {
    e->session = std::make_unique<AnnotationSession>(video, static_cast<std::int64_t>(frames.size()));
  }
  return *entries_.emplace(video, std::move(e)).first->second;
}

std::vector<std::uint8_t> AnnotationStore::frame_image(const std::string& video, std::int64_t n) const {
  auto& self = const_cast<AnnotationStore&>(*this);
  Entry& e = self.entry(video);
  if (n < 0 || n >= static_cast<std::int64_t>(e.frames.size()))
    throw NotFoundError("video '" + video + "' has no frame " + std::to_string(n));
  const fs::path& p = e.frames[static_cast<std::size_t>(n)];
  if (p.extension() == ".ppm") return read_file(p);
  const RawFrame f = p.extension() == ".rgbp" ? read_rgbp(p).rgb : read_pnm(p);
  const std::string header = "P6\n" + std::to_string(f.width) + " " + std::to_string(f.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), f.pixels.begin(), f.pixels.end());
  return out;
}

AnnotationSession AnnotationStore::session(const std::string& video) {
  Entry& e = entry(video);
  std::lock_guard lock(e.mutex);
  return *e.session;
}

void AnnotationStore::persist(const std::string& video, const AnnotationSession& s) const {
  const fs::path dir = root_ / "videos" / video;
  const std::string text = s.to_json();
  write_file(dir / "session.json.tmp", std::vector<std::uint8_t>(text.begin(), text.end()));
  fs::rename(dir / "session.json.tmp", dir / "session.json");
}

std::vector<std::int64_t> AnnotationStore::timestamps(const std::string& video, const Entry& e) const {
  std::optional<LabelTable> labels;
  const fs::path path = root_ / "videos" / video / "labels.csv";
  if (fs::exists(path)) labels = read_label_table(path);
  std::vector<std::int64_t> out;
  for (auto id : e.frame_ids) {
    const LabelRow* row = labels ? labels->find(id) : nullptr;
    out.push_back(row ? row->timestamp_ms : id * 1000 / fps_);
  }
  return out;
}

fs::path AnnotationStore::export_labels(const std::string& video) {
  Entry& e = entry(video);
  std::lock_guard lock(e.mutex);
  const fs::path path = root_ / "videos" / video / "labels.csv";
  std::optional<LabelTable> existing;
  if (fs::exists(path)) existing = read_label_table(path);
  const LabelTable table = e.session->export_labels(e.frame_ids, timestamps(video, e), existing ? &*existing : nullptr);
  write_label_table(path, table);
  return path;
}

}  // namespace pcount
