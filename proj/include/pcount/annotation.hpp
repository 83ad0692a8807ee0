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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pcount/dataset_io.hpp"
#include "pcount/errors.hpp"
#include "pcount/label.hpp"

namespace pcount {

struct AnnotationEvent {
  std::int64_t frame = 0;
  int delta = 0;  // +1 or -1

  friend bool operator==(const AnnotationEvent&, const AnnotationEvent&) = default;
};

/// Initial count plus a log of +-1 adjustments. The label at frame k is the
/// initial count plus every delta at frames <= k, so the log is the only state.
class AnnotationSession {
 public:
  AnnotationSession(std::string video_id, std::int64_t frame_count, LabelMode mode = LabelMode::all_people);

  /// Throws InvariantError on a negative count or when the existing log would
  /// go negative from the new anchor.
  void set_initial(std::int64_t count);
  /// Appends an event; throws InvariantError (and leaves the log unchanged)
  /// when any label would become negative, RangeError for a bad frame/delta.
  void adjust(std::int64_t frame, int delta);
  /// Removes the most recently appended event. Returns false on an empty log.
  bool undo();
  void set_mode(LabelMode mode) { mode_ = mode; }

  [[nodiscard]] std::vector<std::int64_t> materialize() const;
  [[nodiscard]] std::int64_t count_at(std::int64_t frame) const;

  [[nodiscard]] const std::string& video_id() const { return video_id_; }
  [[nodiscard]] std::int64_t frame_count() const { return frame_count_; }
  [[nodiscard]] std::optional<std::int64_t> initial() const { return initial_; }
  [[nodiscard]] LabelMode mode() const { return mode_; }
  /// Events in the order they were appended.
  [[nodiscard]] const std::vector<AnnotationEvent>& log() const { return log_; }

  /// One row per frame. \p frame_ids and \p timestamps give the row keys.
  /// all_people writes people_count (keeping any customer column of
  /// \p existing); customers_only needs \p existing and writes only
  /// customer_count.
  [[nodiscard]] LabelTable export_labels(const std::vector<std::int64_t>& frame_ids,
                                         const std::vector<std::int64_t>& timestamps,
                                         const LabelTable* existing = nullptr) const;

  [[nodiscard]] std::string to_json() const;
  static AnnotationSession from_json(const std::string& text);

  friend bool operator==(const AnnotationSession&, const AnnotationSession&) = default;

 private:
  void check_non_negative(std::optional<std::int64_t> initial) const;

  std::string video_id_;
  std::int64_t frame_count_;
  LabelMode mode_;
  std::optional<std::int64_t> initial_;
  std::vector<AnnotationEvent> log_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Videos under root/videos/<id>/frames (.ppm, .pgm or .rgbp files named by
/// frame id). Sessions persist to root/videos/<id>/session.json and exports
/// go to root/videos/<id>/labels.csv.
class AnnotationStore {
 public:
  explicit AnnotationStore(std::filesystem::path root, int fps = 5);

  struct VideoInfo {
    std::string id;
    std::int64_t frames = 0;
  };
  [[nodiscard]] std::vector<VideoInfo> videos() const;

  /// Frame n (0-based position) of a video as binary PPM bytes.
  [[nodiscard]] std::vector<std::uint8_t> frame_image(const std::string& video, std::int64_t n) const;

  /// Runs \p fn on the session under its lock and persists any change.
  template <typename Fn>
  auto with_session(const std::string& video, Fn&& fn);

  [[nodiscard]] AnnotationSession session(const std::string& video);
  /// Writes labels.csv and returns its path.
  std::filesystem::path export_labels(const std::string& video);

  [[nodiscard]] const std::filesystem::path& root() const { return root_; }

 private:
  struct Entry {
    std::mutex mutex;
    std::unique_ptr<AnnotationSession> session;
    std::vector<std::filesystem::path> frames;
    std::vector<std::int64_t> frame_ids;
  };
  Entry& entry(const std::string& video);
  void persist(const std::string& video, const AnnotationSession& s) const;
  std::vector<std::int64_t> timestamps(const std::string& video, const Entry& e) const;

  std::filesystem::path root_;
  int fps_;
  std::mutex entries_mutex_;
  std::map<std::string, std::unique_ptr<Entry>> entries_;
};

template <typename Fn>
auto AnnotationStore::with_session(const std::string& video, Fn&& fn) {
  Entry& e = entry(video);
  std::lock_guard lock(e.mutex);
  AnnotationSession copy = *e.session;
  if constexpr (std::is_void_v<decltype(fn(copy))>) {
    fn(copy);
    if (!(copy == *e.session)) {
      persist(video, copy);
      *e.session = std::move(copy);
    }
  } else {
    auto result = fn(copy);
    if (!(copy == *e.session)) {
      persist(video, copy);
      *e.session = std::move(copy);
    }
    return result;
  }
}

/// HTTP front end for an AnnotationStore. Bodies are JSON; invariant
/// violations answer 422, unknown videos or frames 404, malformed bodies 400.
class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationStore& store);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds an ephemeral port and returns it, or -1.
  int bind_any_port(const std::string& host = "127.0.0.1");
  /// Serves on a port bound by bind_any_port(); blocks until stop().
  bool listen_after_bind();
  /// Binds and serves; blocks until stop().
  bool listen(const std::string& host, int port);
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pcount
