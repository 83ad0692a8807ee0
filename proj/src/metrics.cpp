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
#include "pcount/metrics.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "pcount/errors.hpp"
#include "pcount/lrcn.hpp"

namespace pcount {

namespace {

void check(std::span<const double> t, std::span<const double> y) {
  if (t.empty()) throw RangeError("metrics need at least one sample");
  if (t.size() != y.size()) throw ShapeError("targets and predictions differ in length");
  for (double v : t)
    if (!(v >= 0.0) || v != std::floor(v)) throw RangeError("targets must be non-negative integers");
}

}  // namespace

double relative_error_E(std::span<const double> t, std::span<const double> y) {
  check(t, y);
  double sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double err = std::abs(t[i] - static_cast<double>(round_count(y[i])));
    sum += err / (t[i] == 0.0 ? 1.0 : t[i]);
  }
  return 100.0 * sum / static_cast<double>(t.size());
}

double mae_metric(std::span<const double> t, std::span<const double> y) {
  check(t, y);
  double sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) sum += std::abs(y[i] - t[i]);
  return sum / static_cast<double>(t.size());
}

std::map<std::int64_t, double> abs_error_hist(std::span<const double> t, std::span<const double> y) {
  check(t, y);
  std::map<std::int64_t, std::size_t> tally;
  for (std::size_t i = 0; i < t.size(); ++i)
    ++tally[std::llabs(static_cast<std::int64_t>(t[i]) - round_count(y[i]))];
  std::map<std::int64_t, double> hist;
  for (auto [err, count] : tally) hist[err] = static_cast<double>(count) / static_cast<double>(t.size());
  return hist;
}

EvalReport evaluate_predictions(std::span<const double> t, std::span<const double> y) {
  EvalReport r;
  r.relative_error = relative_error_E(t, y);
  r.mae = mae_metric(t, y);
  r.abs_error_hist = abs_error_hist(t, y);
  r.n = t.size();
  return r;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["E"] = report.relative_error;
  j["mae"] = report.mae;
  j["n"] = report.n;
  auto pairs = nlohmann::ordered_json::array();
  for (auto [err, freq] : report.abs_error_hist) pairs.push_back({err, freq});
  j["abs_error_hist"] = pairs;
  return j.dump(2) + "\n";
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "abs_error,frequency\n";
  for (auto [err, freq] : report.abs_error_hist) out << err << ',' << freq << '\n';
  return out.str();
}

void write_report(const EvalReport& report, const std::string& json_path, const std::string& csv_path) {
  auto put = [](const std::string& path, const std::string& text) {
    if (path.empty()) return;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
  };
  put(json_path, report_json(report));
  put(csv_path, report_csv(report));
}

}  // namespace pcount
