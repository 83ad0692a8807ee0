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
#include <httplib.h>

#include <json.hpp>
#include <random>
#include <thread>

#include "pcount/annotation.hpp"
#include "pcount/dataset_io.hpp"
#include "pcount/errors.hpp"
#include "tmpdir.hpp"

using namespace pcount;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Counts by brute force: label at k = initial + sum of deltas at frames <= k.
std::vector<std::int64_t> replay(std::int64_t initial, const std::vector<AnnotationEvent>& log, std::int64_t frames) {
  std::vector<std::int64_t> out(static_cast<std::size_t>(frames), initial);
  for (std::int64_t k = 0; k < frames; ++k)
    for (const auto& e : log)
      if (e.frame <= k) out[static_cast<std::size_t>(k)] += e.delta;
  return out;
}

// Valid iff every materialized label is non-negative.
bool oracle_valid(std::int64_t initial, const std::vector<AnnotationEvent>& log, std::int64_t frames) {
  for (auto v : replay(initial, log, frames))
    if (v < 0) return false;
  return true;
}

void make_video(const fs::path& root, const std::string& id, int frames, int first_id = 0, int step = 1) {
  const fs::path dir = root / "videos" / id / "frames";
  fs::create_directories(dir);
  for (int k = 0; k < frames; ++k) {
    RawFrame f(4, 3);
    for (std::size_t i = 0; i < f.pixels.size(); ++i) f.pixels[i] = static_cast<std::uint8_t>(k * 10 + i);
    write_ppm(dir / (std::to_string(first_id + k * step) + ".ppm"), f);
  }
}

}  // namespace

TEST_CASE("session basics") {
  AnnotationSession s("v", 20);
  CHECK_THROWS_AS((void)s.materialize(), InvariantError);
  CHECK_THROWS_AS(s.adjust(0, 1), InvariantError);
  s.set_initial(3);
  CHECK(s.materialize() == std::vector<std::int64_t>(20, 3));
  s.adjust(10, +1);
  const auto c = s.materialize();
  CHECK(c[9] == 3);
  for (int k = 10; k < 20; ++k) CHECK(c[static_cast<std::size_t>(k)] == 4);
  CHECK(s.count_at(10) == 4);
  CHECK_THROWS_AS(s.adjust(20, 1), RangeError);
  CHECK_THROWS_AS(s.adjust(-1, 1), RangeError);
  CHECK_THROWS_AS(s.adjust(3, 2), RangeError);
  CHECK_THROWS_AS(s.set_initial(-1), InvariantError);
}

TEST_CASE("decrement from zero is rejected and leaves the log alone") {
  AnnotationSession s("v", 5);
  s.set_initial(0);
  CHECK_THROWS_AS(s.adjust(0, -1), InvariantError);
  CHECK(s.log().empty());
  s.adjust(2, +1);
  s.adjust(3, -1);
  CHECK_THROWS_AS(s.adjust(1, -1), InvariantError);  // frame 1 would read -1
  CHECK(s.log().size() == 2);
  CHECK(s.materialize() == std::vector<std::int64_t>{0, 0, 1, 0, 0});
}

TEST_CASE("only materialized labels are constrained") {
  // Frame 2 holds -1 then +1; a later -1 at frame 0 leaves every label at 0.
  AnnotationSession s("v", 3);
  s.set_initial(1);
  s.adjust(2, -1);
  s.adjust(2, +1);
  s.adjust(0, -1);
  CHECK(s.materialize() == std::vector<std::int64_t>{0, 0, 0});
}

TEST_CASE("lowering the initial count is checked against the log") {
  AnnotationSession s("v", 5);
  s.set_initial(1);
  s.adjust(1, -1);
  CHECK_THROWS_AS(s.set_initial(0), InvariantError);
  CHECK(s.initial() == 1);
}

TEST_CASE("undo pops the last appended event") {
  AnnotationSession s("v", 6);
  s.set_initial(1);
  CHECK_FALSE(s.undo());
  s.adjust(4, +1);
  s.adjust(1, +1);
  s.adjust(2, -1);
  CHECK(s.undo());
  CHECK(s.log() == std::vector<AnnotationEvent>{{4, 1}, {1, 1}});
  CHECK(s.materialize() == replay(1, s.log(), 6));
}

TEST_CASE("undo that would go negative is refused") {
  // A +1 can become load-bearing after the anchor is lowered.
  AnnotationSession s("v", 2);
  s.set_initial(1);
  s.adjust(1, -1);
  s.adjust(0, +1);
  s.set_initial(0);
  CHECK(s.materialize() == std::vector<std::int64_t>{1, 0});
  CHECK_THROWS_AS(s.undo(), InvariantError);
  CHECK(s.log().size() == 2);
}

TEST_CASE("random sessions match the replay oracle") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 300; ++trial) {
    const std::int64_t frames = 1 + static_cast<std::int64_t>(rng() % 30);
    const std::int64_t initial = static_cast<std::int64_t>(rng() % 4);
    AnnotationSession s("v", frames);
    s.set_initial(initial);
    std::vector<AnnotationEvent> model;
    for (int step = 0; step < 40; ++step) {
      if (rng() % 6 == 0) {
        std::vector<AnnotationEvent> cand = model;
        if (!cand.empty()) cand.pop_back();
        const bool ok = !model.empty() && oracle_valid(initial, cand, frames);
        if (model.empty()) {
          CHECK_FALSE(s.undo());
        } else if (ok) {
          CHECK(s.undo());
          model = cand;
        } else {
          CHECK_THROWS_AS(s.undo(), InvariantError);
        }
      } else {
        const AnnotationEvent e{static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(frames)),
                                rng() % 2 ? 1 : -1};
        auto cand = model;
        cand.push_back(e);
        if (oracle_valid(initial, cand, frames)) {
          s.adjust(e.frame, e.delta);
          model = cand;
        } else {
          CHECK_THROWS_AS(s.adjust(e.frame, e.delta), InvariantError);
        }
      }
      REQUIRE(s.log() == model);
      const auto got = s.materialize();
      REQUIRE(got == replay(initial, model, frames));
      for (auto v : got) REQUIRE(v >= 0);
    }
  }
}

TEST_CASE("materialized counts only depend on the frame-ordered log") {
  // Labels of frames < k never change when an event is applied at k.
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    AnnotationSession s("v", 25);
    s.set_initial(5);
    for (int step = 0; step < 20; ++step) {
      const auto before = s.materialize();
      const std::int64_t k = static_cast<std::int64_t>(rng() % 25);
      try {
        s.adjust(k, rng() % 2 ? 1 : -1);
      } catch (const InvariantError&) {
        continue;
      }
      const auto after = s.materialize();
      for (std::int64_t j = 0; j < k; ++j) REQUIRE(after[static_cast<std::size_t>(j)] == before[static_cast<std::size_t>(j)]);
    }
  }
}

TEST_CASE("session json round trip") {
  AnnotationSession s("shop", 8, LabelMode::customers_only);
  CHECK(AnnotationSession::from_json(s.to_json()) == s);
  s.set_initial(2);
  s.adjust(5, -1);
  s.adjust(1, +1);
  s.adjust(5, -1);
  const auto back = AnnotationSession::from_json(s.to_json());
  CHECK(back == s);
  CHECK(back.log() == s.log());
  CHECK_THROWS_AS(AnnotationSession::from_json("{"), FormatError);
  CHECK_THROWS_AS(AnnotationSession::from_json(R"({"video":"v"})"), FormatError);
}

TEST_CASE("export in both label modes") {
  AnnotationSession s("v", 4);
  s.set_initial(2);
  s.adjust(2, +1);
  const std::vector<std::int64_t> ids{0, 5, 10, 15}, ts{0, 1000, 2000, 3000};
  const LabelTable people = s.export_labels(ids, ts);
  REQUIRE(people.rows.size() == 4);
  CHECK(people.rows[1] == LabelRow{5, 1000, {2, std::nullopt}});
  CHECK(people.rows[2].label.total_count == 3);
  CHECK_FALSE(people.has_customer_labels());

  AnnotationSession c("v", 4, LabelMode::customers_only);
  c.set_initial(1);
  CHECK_THROWS_AS((void)c.export_labels(ids, ts), InvariantError);
  const LabelTable both = c.export_labels(ids, ts, &people);
  CHECK(both.rows[2].label == PeopleLabel{3, 1});

  // Re-exporting people keeps the customer column.
  s.adjust(3, -1);
  const LabelTable again = s.export_labels(ids, ts, &both);
  CHECK(again.rows[3].label == PeopleLabel{2, 1});

  // Customers exceeding people is refused.
  c.adjust(0, +1);
  c.adjust(0, +1);
  CHECK_THROWS_AS((void)c.export_labels(ids, ts, &people), InvariantError);
  CHECK_THROWS_AS((void)s.export_labels({0, 1}, {0, 1}), ShapeError);
}

TEST_CASE("store persists sessions and exports labels") {
  testutil::TempDir dir("pcount_ann");
  make_video(dir.path, "cam1", 6, 0, 5);
  make_video(dir.path, "cam2", 2);
  {
    AnnotationStore store(dir.path);
    const auto vids = store.videos();
    REQUIRE(vids.size() == 2);
    CHECK(vids[0].id == "cam1");
    CHECK(vids[0].frames == 6);
    store.with_session("cam1", [](AnnotationSession& s) {
      s.set_initial(1);
      s.adjust(3, +1);
    });
    CHECK_THROWS_AS(store.with_session("cam1", [](AnnotationSession& s) { s.adjust(0, -1); s.adjust(0, -1); }),
                    InvariantError);
    CHECK(store.session("cam1").log().size() == 1);  // failed edit was not kept
    CHECK_THROWS_AS((void)store.session("nope"), NotFoundError);
    CHECK_THROWS_AS((void)store.session("../x"), NotFoundError);
    const auto img = store.frame_image("cam1", 2);
    CHECK(read_file(dir.path / "videos/cam1/frames/10.ppm") == img);
    CHECK_THROWS_AS((void)store.frame_image("cam1", 6), NotFoundError);
  }
  AnnotationStore reopened(dir.path);
  const auto s = reopened.session("cam1");
  CHECK(s.initial() == 1);
  CHECK(s.log() == std::vector<AnnotationEvent>{{3, 1}});
  const auto path = reopened.export_labels("cam1");
  const LabelTable t = read_label_table(path);
  REQUIRE(t.rows.size() == 6);
  CHECK(t.rows[3] == LabelRow{15, 3000, {2, std::nullopt}});
  CHECK(t.rows[2].label.total_count == 1);
}

TEST_CASE("http api") {
  testutil::TempDir dir("pcount_http");
  make_video(dir.path, "cam1", 5);
  AnnotationStore store(dir.path);
  AnnotationServer server(store);
  const int port = server.bind_any_port();
  REQUIRE(port > 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  auto r = cli.Get("/videos");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(json::parse(r->body) == json::parse(R"([{"id":"cam1","frames":5}])"));

  r = cli.Get("/videos/cam1/frames/1");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(r->get_header_value("Content-Type") == "image/x-portable-pixmap");
  CHECK(r->body.rfind("P6", 0) == 0);
  CHECK(cli.Get("/videos/cam1/frames/9")->status == 404);
  CHECK(cli.Get("/videos/zzz/session")->status == 404);

  // Events before the initial count are invalid.
  CHECK(cli.Post("/videos/cam1/session/events", R"({"frame":0,"delta":1})", "application/json")->status == 422);
  CHECK(cli.Put("/videos/cam1/session/initial", "not json", "application/json")->status == 400);
  r = cli.Put("/videos/cam1/session/initial", R"({"count":0})", "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(json::parse(r->body)["counts"] == json::parse("[0,0,0,0,0]"));

  CHECK(cli.Post("/videos/cam1/session/events", R"({"frame":0,"delta":-1})", "application/json")->status == 422);
  CHECK(cli.Post("/videos/cam1/session/events", R"({"frame":0})", "application/json")->status == 400);
  r = cli.Post("/videos/cam1/session/events", R"({"frame":2,"delta":1})", "application/json");
  REQUIRE(r);
  CHECK(r->status == 201);
  CHECK(json::parse(r->body)["count"] == 1);
  CHECK(json::parse(cli.Get("/videos/cam1/session/counts/4")->body)["count"] == 1);
  CHECK(cli.Get("/videos/cam1/session/counts/5")->status == 404);

  r = cli.Delete("/videos/cam1/session/events/last");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(json::parse(r->body)["events"].empty());
  CHECK(cli.Delete("/videos/cam1/session/events/last")->status == 422);

  cli.Post("/videos/cam1/session/events", R"({"frame":1,"delta":1})", "application/json");
  r = cli.Post("/videos/cam1/export", "", "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  const auto body = json::parse(r->body);
  CHECK(body["rows"] == 5);
  const LabelTable table = read_label_table(body["path"].get<std::string>());
  CHECK(table.rows[0].label.total_count == 0);
  CHECK(table.rows[1].label.total_count == 1);

  // customers-only on top of the people table.
  CHECK(cli.Put("/videos/cam1/session/mode", R"({"mode":"bogus"})", "application/json")->status == 400);
  CHECK(cli.Put("/videos/cam1/session/mode", R"({"mode":"customers_only"})", "application/json")->status == 200);
  CHECK(cli.Post("/videos/cam1/export", "", "application/json")->status == 200);
  const LabelTable merged = read_label_table(body["path"].get<std::string>());
  CHECK(merged.rows[1].label == PeopleLabel{1, 1});

  server.stop();
  t.join();
}
