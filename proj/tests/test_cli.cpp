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

#include <fstream>
#include <sstream>

#include "pcount/checkpoint.hpp"
#include "pcount/cli.hpp"
#include "pcount/dataset_io.hpp"
#include "pcount/predictor.hpp"
#include "tmpdir.hpp"

using namespace pcount;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = run_cli(args, in, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  const Run r = run({"evaluate", "--manifest", "m", "--checkpoint", "c", "--no-such-flag"});
  CHECK(r.code == kExitUsage);
  CHECK_FALSE(r.err.empty());
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("missing inputs fail with a message") {
  const Run r = run({"evaluate", "--manifest", "/nonexistent/m.json", "--checkpoint", "/nonexistent/c"});
  CHECK(r.code == kExitFailure);
  CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("end to end through the command line") {
  testutil::TempDir dir("pcount_cli");
  const std::string root = dir.path.string();
  const std::vector<std::string> geom{"--width", "100", "--height", "56"};
  auto with = [&](std::vector<std::string> a, const std::vector<std::string>& extra) {
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };

  REQUIRE(run(with({"synth", "--out", root + "/raw", "--frames", "120", "--actors", "2", "--seed", "3"}, geom)).code == 0);
  CHECK(fs::exists(dir.path / "raw/videos/synth/masks/0.pgm"));
  CHECK(read_label_table(dir.path / "raw/videos/synth/labels.csv").rows.size() == 120);

  Run r = run(with({"preprocess", "--in", root + "/raw", "--out", root + "/rgbp", "--eta", "10", "--bg-interval-ms", "0"}, geom));
  REQUIRE(r.code == 0);
  // the first eta frames only warm the background
  CHECK(!fs::exists(dir.path / "rgbp/videos/synth/frames/9.rgbp"));
  CHECK(fs::exists(dir.path / "rgbp/videos/synth/frames/10.rgbp"));
  CHECK(read_rgbp(dir.path / "rgbp/videos/synth/frames/10.rgbp").rgb.width == 100);

  r = run({"import", "--in", root + "/rgbp", "--out", root + "/m.json", "--stride", "5", "--seq-len", "3"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("sequences 20") != std::string::npos);

  r = run({"train", "--manifest", root + "/m.json", "--out", root + "/lrcn.ckpt", "--filters", "2", "--units", "8",
           "--epochs", "2", "--seed", "1", "--report", root + "/rep.csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("test E=") != std::string::npos);
  CHECK(load_lrcn(dir.path / "lrcn.ckpt").seq_len() == 3);

  r = run({"train", "--manifest", root + "/m.json", "--out", root + "/x.ckpt", "--seq-len", "4"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("config error") != std::string::npos);
  r = run({"train", "--manifest", root + "/m.json", "--out", root + "/x.ckpt", "--strategy", "transfer"});
  CHECK(r.code == kExitUsage);

  r = run({"evaluate", "--manifest", root + "/m.json", "--checkpoint", root + "/lrcn.ckpt", "--out", root + "/ev/r"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("E=") != std::string::npos);
  CHECK(r.out.find("MAE=") != std::string::npos);
  CHECK(r.out.find("histogram " + root + "/ev/r_hist.csv") != std::string::npos);
  CHECK(fs::exists(dir.path / "ev/r.json"));

  // retailnet baseline, then transfer from it
  r = run({"train", "--model", "retailnet", "--manifest", root + "/m.json", "--out", root + "/rn.ckpt", "--filters",
           "2", "--epochs", "1"});
  REQUIRE(r.code == 0);
  r = run({"train", "--manifest", root + "/m.json", "--out", root + "/tr.ckpt", "--strategy", "transfer", "--checkpoint",
           root + "/rn.ckpt", "--filters", "2", "--units", "8", "--epochs", "1"});
  REQUIRE(r.code == 0);

  const std::vector<std::string> pipe{"--eta", "10", "--bg-interval-ms", "0", "--width", "100", "--height", "56"};
  r = run(with({"predict", "--checkpoint", root + "/lrcn.ckpt", "--seq-len", "4", "--in", root + "/raw/videos/synth/frames"}, pipe));
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("does not match checkpoint") != std::string::npos);

  r = run(with({"predict", "--checkpoint", root + "/lrcn.ckpt", "--in", root + "/raw/videos/synth/frames"}, pipe));
  REQUIRE(r.code == 0);
  // 120 frames, windows need eta frames then (T-1)*stride more
  std::istringstream lines(r.out);
  std::string line;
  std::vector<std::string> events;
  while (std::getline(lines, line)) events.push_back(line);
  CHECK(events.size() == 20);
  CHECK(std::count(events[0].begin(), events[0].end(), ',') == 2);

  // same frames on stdin as a PPM stream give the same events
  std::string stream;
  for (int k = 0; k < 120; ++k) {
    const auto bytes = read_file(dir.path / "raw/videos/synth/frames" / (std::to_string(k) + ".ppm"));
    stream.append(bytes.begin(), bytes.end());
  }
  const Run s = run(with({"predict", "--checkpoint", root + "/lrcn.ckpt", "--fps", "20"}, pipe), stream);
  REQUIRE(s.code == 0);
  // directory mode uses the same 20 fps default, so timestamps agree
  CHECK(s.out == r.out);
}
