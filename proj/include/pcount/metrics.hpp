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
#include <map>
#include <span>
#include <string>

namespace pcount {

/// Evaluation summary: relative error in percent, MAE on raw outputs and the
/// relative frequency of each rounded absolute error.
struct EvalReport {
  double relative_error = 0.0;
  double mae = 0.0;
  std::map<std::int64_t, double> abs_error_hist;
  std::size_t n = 0;
};

double relative_error_E(std::span<const double> targets, std::span<const double> predictions);
double mae_metric(std::span<const double> targets, std::span<const double> predictions);
std::map<std::int64_t, double> abs_error_hist(std::span<const double> targets,
                                              std::span<const double> predictions);
EvalReport evaluate_predictions(std::span<const double> targets, std::span<const double> predictions);

std::string report_json(const EvalReport& report);
std::string report_csv(const EvalReport& report);
void write_report(const EvalReport& report, const std::string& json_path, const std::string& csv_path);

}  // namespace pcount
