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
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcount/dataset_io.hpp"
#include "pcount/lrcn.hpp"
#include "pcount/metrics.hpp"
#include "pcount/retailnet.hpp"
#include "pcount/synthetic.hpp"

namespace pcount {

struct TrainSample {
  std::vector<std::size_t> frames;  // indices into Dataset::frames, oldest first
  PeopleLabel label;
};

/// Labelled sequences over a shared pool of frames; overlapping windows
/// reference the same frame tensors.
struct Dataset {
  std::shared_ptr<const std::vector<Tensor3<float>>> frames;
  std::vector<TrainSample> samples;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] Dataset subset(std::span<const std::size_t> indices) const;
  [[nodiscard]] std::vector<std::int64_t> targets(LabelMode mode) const;

  /// Windows of \p seq_len kept frames (every \p stride-th raw index), each
  /// labelled with its last frame. A gap in raw indices restarts the window.
  static Dataset from_frames(const std::vector<LabelledFrame>& frames, int seq_len, int stride);
  static Dataset from_manifest(const SequenceManifest& manifest);
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per distinct key, round(fraction * n) samples go to train. Deterministic for a seed.
SplitIndices stratified_split(std::span<const std::int64_t> keys, double fraction, std::uint64_t seed);

/// Mean absolute error over raw predictions.
double mae_loss(std::span<const double> predictions, std::span<const double> targets);

enum class Strategy { scratch, transfer, fine_tune };
const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& text);

struct TrainConfig {
  double learning_rate = 1e-3;
  double fine_tune_learning_rate = 1e-4;
  int batch_size = 16;
  int max_epochs = 100;
  int patience = 10;
  double split_fraction = 0.7;
  double validation_fraction = 0.1;  // of the training part, held out for early stopping
  Strategy strategy = Strategy::scratch;
  LabelMode label_mode = LabelMode::all_people;
  std::uint64_t seed = 0;
  /// Stop as soon as eval-mode training MAE reaches this value.
  std::optional<double> stop_at_train_loss;
  bool restore_best = true;
  std::function<void(int epoch, double train_loss, double val_loss)> on_epoch;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainReport {
  Strategy strategy = Strategy::scratch;
  LabelMode label_mode = LabelMode::all_people;
  std::int64_t trainable_params = 0;
  std::vector<EpochStats> epochs;
  int stopped_epoch = 0;
  int best_epoch = 0;
  std::string stop_reason;
  std::optional<EvalReport> test;
  double wall_seconds = 0.0;
};

/// Adam with the usual moment constants; frozen groups are never touched.
template <typename Real>
class Adam {
 public:
  Adam(const std::vector<ParamGroup<Real>>& params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step(std::vector<ParamGroup<Real>>& params, const Gradients<Real>& grads);
  [[nodiscard]] std::int64_t steps() const { return t_; }

 private:
  double lr_, b1_, b2_, eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

template <typename Model>
std::vector<double> predict_all(const Model& model, const Dataset& data);

template <typename Model>
EvalReport evaluate(const Model& model, const Dataset& data, LabelMode mode = LabelMode::all_people);

/// Minimizes the MAE loss on \p data. A stratified validation holdout drives
/// early stopping; with no holdout the training loss does.
template <typename Model>
TrainReport train(Model& model, const Dataset& data, const TrainConfig& config);

struct StrategyInputs {
  LrcnConfig model;
  std::optional<ConvWeights<float>> base_conv;  // from a trained single-image model
  std::optional<LrcnModel<float>> start;        // transfer-trained model for fine_tune
};

struct StrategyResult {
  LrcnModel<float> model;
  TrainReport report;
};

/// Splits \p data, trains with the chosen strategy and evaluates on the test part.
StrategyResult run_strategy(Strategy strategy, const Dataset& data, const StrategyInputs& inputs,
                            const TrainConfig& config);

std::string format_training_report(const TrainReport& report);
void write_training_report(const std::filesystem::path& path, const TrainReport& report);

}  // namespace pcount
