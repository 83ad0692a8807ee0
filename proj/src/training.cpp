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
#include "pcount/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <type_traits>

#include "pcount/errors.hpp"

namespace pcount {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.frames = frames;
  out.samples.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= samples.size()) throw RangeError("subset index out of range");
    out.samples.push_back(samples[i]);
  }
  return out;
}

std::vector<std::int64_t> Dataset::targets(LabelMode mode) const {
  std::vector<std::int64_t> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(target_count(s.label, mode));
  return out;
}

Dataset Dataset::from_frames(const std::vector<LabelledFrame>& frames, int seq_len, int stride) {
  if (seq_len < 1 || stride < 1) throw ConfigError("sequence length and stride must be >= 1");
  auto pool = std::make_shared<std::vector<Tensor3<float>>>();
  Dataset out;
  std::vector<std::size_t> window;
  std::optional<std::int64_t> origin, last;
  for (const auto& lf : frames) {
    const std::int64_t idx = lf.frame.index();
    if (!origin) origin = idx;
    if (idx < *origin || (idx - *origin) % stride != 0) continue;
    if (last && idx != *last + stride) window.clear();
    last = idx;
    pool->push_back(to_tensor<float>(lf.frame));
    window.push_back(pool->size() - 1);
    if (static_cast<int>(window.size()) > seq_len) window.erase(window.begin());
    if (static_cast<int>(window.size()) == seq_len) out.samples.push_back({window, lf.label});
  }
  out.frames = std::move(pool);
  return out;
}

Dataset Dataset::from_manifest(const SequenceManifest& manifest) {
  manifest.validate();
  auto pool = std::make_shared<std::vector<Tensor3<float>>>();
  std::map<std::string, std::size_t> loaded;
  Dataset out;
  for (const auto& entry : manifest.sequences) {
    TrainSample s;
    s.label = entry.label;
    for (const auto& rel : entry.frames) {
      auto [it, fresh] = loaded.try_emplace(rel, pool->size());
      if (fresh) pool->push_back(to_tensor<float>(read_rgbp(std::filesystem::path(manifest.root) / rel)));
      s.frames.push_back(it->second);
    }
    out.samples.push_back(std::move(s));
  }
  out.frames = std::move(pool);
  return out;
}

SplitIndices stratified_split(std::span<const std::int64_t> keys, double fraction, std::uint64_t seed) {
  if (keys.empty()) throw RangeError("cannot split an empty dataset");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
  std::map<std::int64_t, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < keys.size(); ++i) strata[keys[i]].push_back(i);
  Rng rng(seed);
  SplitIndices out;
  for (auto& [key, members] : strata) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

double mae_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.empty()) throw RangeError("mae_loss needs at least one sample");
  if (predictions.size() != targets.size()) throw ShapeError("predictions and targets differ in length");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) sum += std::abs(predictions[i] - targets[i]);
  return sum / static_cast<double>(predictions.size());
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::scratch: return "scratch";
    case Strategy::transfer: return "transfer";
    case Strategy::fine_tune: return "fine_tune";
  }
  return "?";
}

Strategy parse_strategy(const std::string& text) {
  if (text == "scratch") return Strategy::scratch;
  if (text == "transfer") return Strategy::transfer;
  if (text == "fine_tune" || text == "fine-tune") return Strategy::fine_tune;
  throw ConfigError("unknown strategy '" + text + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !(fine_tune_learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw ConfigError("split fraction must lie in (0, 1)");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) throw ConfigError("validation fraction must lie in [0, 1)");
  if (batch_size < 1 || max_epochs < 1 || patience < 1) throw ConfigError("batch size, epochs and patience must be >= 1");
}

template <typename Real>
Adam<Real>::Adam(const std::vector<ParamGroup<Real>>& params, double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
  for (const auto& g : params) {
    m_.emplace_back(g.size(), 0.0);
    v_.emplace_back(g.size(), 0.0);
  }
}

template <typename Real>
void Adam<Real>::step(std::vector<ParamGroup<Real>>& params, const Gradients<Real>& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].trainable) continue;
    auto& w = params[k].values;
    auto& m = m_[k];
    auto& v = v_[k];
    const auto& g = grads[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      m[i] = b1_ * m[i] + (1.0 - b1_) * gi;
      v[i] = b2_ * v[i] + (1.0 - b2_) * gi * gi;
      w[i] -= static_cast<Real>(lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_));
    }
  }
}

template class Adam<float>;
template class Adam<double>;

namespace {

template <typename Model>
constexpr bool kUsesLastFrameOnly = std::is_same_v<Model, RetailNetModel<float>>;

/// Frames of \p s the model consumes.
template <typename Model>
std::span<const std::size_t> used_frames(const Model& model, const TrainSample& s) {
  const auto T = static_cast<std::size_t>(model.seq_len());
  if constexpr (kUsesLastFrameOnly<Model>) {
    if (s.frames.empty()) throw ConfigError("empty sample");
    return std::span<const std::size_t>(s.frames).last(1);
  } else {
    if (s.frames.size() != T)
      throw ConfigError("sample has " + std::to_string(s.frames.size()) + " frames but the model expects T=" +
                        std::to_string(T));
    return s.frames;
  }
}

template <typename Model>
void check_dataset(const Model& model, const Dataset& data, LabelMode mode) {
  if (!data.frames) throw ConfigError("dataset has no frame pool");
  for (const auto& s : data.samples) {
    for (std::size_t f : used_frames(model, s)) {
      if (f >= data.frames->size()) throw RangeError("sample references a missing frame");
      if ((*data.frames)[f].shape != model.input_shape())
        throw ShapeError("dataset frame shape does not match the model input");
    }
    if (mode == LabelMode::customers_only && !s.label.customer_count)
      throw InvariantError("customers_only training needs customer labels on every sample");
  }
}

using FeatureMap = std::map<std::size_t, std::vector<float>>;

template <typename Model>
std::vector<const std::vector<float>*> feature_ptrs(const Model& model, const TrainSample& s, const FeatureMap& fm) {
  std::vector<const std::vector<float>*> out;
  for (std::size_t f : used_frames(model, s)) out.push_back(&fm.at(f));
  return out;
}

/// Eval-mode outputs for the given samples, computing each needed frame's
/// features once per chunk unless \p cache already holds them.
template <typename Model>
std::vector<double> predict_subset(const Model& model, const Dataset& data, std::span<const std::size_t> which,
                                   const FeatureMap* cache) {
  constexpr std::size_t kChunk = 256;
  std::vector<double> out;
  out.reserve(which.size());
  typename Model::Trace trace;
  for (std::size_t c0 = 0; c0 < which.size(); c0 += kChunk) {
    const std::size_t c1 = std::min(which.size(), c0 + kChunk);
    FeatureMap local;
    if (!cache)
      for (std::size_t i = c0; i < c1; ++i)
        for (std::size_t f : used_frames(model, data.samples[which[i]]))
          if (!local.count(f)) local.emplace(f, model.frame_features((*data.frames)[f], nullptr));
    const FeatureMap& fm = cache ? *cache : local;
    for (std::size_t i = c0; i < c1; ++i) {
      const auto ptrs = feature_ptrs(model, data.samples[which[i]], fm);
      out.push_back(static_cast<double>(model.head_forward(ptrs, trace, nullptr)));
    }
  }
  return out;
}

template <typename Model>
double subset_mae(const Model& model, const Dataset& data, std::span<const std::size_t> which,
                  const std::vector<double>& targets, const FeatureMap* cache) {
  const auto pred = predict_subset(model, data, which, cache);
  std::vector<double> t;
  for (std::size_t i : which) t.push_back(targets[i]);
  return mae_loss(pred, t);
}

}  // namespace

template <typename Model>
std::vector<double> predict_all(const Model& model, const Dataset& data) {
  check_dataset(model, data, LabelMode::all_people);
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  return predict_subset(model, data, all, nullptr);
}

template <typename Model>
EvalReport evaluate(const Model& model, const Dataset& data, LabelMode mode) {
  if (data.size() == 0) throw RangeError("cannot evaluate on an empty test set");
  check_dataset(model, data, mode);
  const auto pred = predict_all(model, data);
  std::vector<double> t;
  for (auto v : data.targets(mode)) t.push_back(static_cast<double>(v));
  return evaluate_predictions(t, pred);
}

template <typename Model>
TrainReport train(Model& model, const Dataset& data, const TrainConfig& config) {
  config.validate();
  if (data.size() == 0) throw RangeError("cannot train on an empty dataset");
  check_dataset(model, data, config.label_mode);
  const auto start = std::chrono::steady_clock::now();

  TrainReport report;
  report.strategy = config.strategy;
  report.label_mode = config.label_mode;
  report.trainable_params = model.count_trainable_params();

  const auto keys = data.targets(config.label_mode);
  const std::vector<double> targets(keys.begin(), keys.end());
  std::vector<std::size_t> fit(data.size()), val;
  std::iota(fit.begin(), fit.end(), 0);
  if (config.validation_fraction > 0.0 && data.size() >= 2) {
    auto split = stratified_split(keys, 1.0 - config.validation_fraction, config.seed ^ 0x5eed5eedULL);
    if (!split.train.empty() && !split.test.empty()) {
      fit = std::move(split.train);
      val = std::move(split.test);
    }
  }

  const bool conv_trainable = model.conv_trainable();
  FeatureMap frozen;  // conv features never change when the conv blocks are frozen
  if (!conv_trainable) {
    for (const auto& s : data.samples)
      for (std::size_t f : used_frames(model, s))
        if (!frozen.count(f)) frozen.emplace(f, model.frame_features((*data.frames)[f], nullptr));
  }
  const FeatureMap* cache = conv_trainable ? nullptr : &frozen;

  Rng rng(config.seed);
  Adam<float> adam(model.params(), config.learning_rate);
  auto best_params = model.params();
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const auto conv_groups = static_cast<std::size_t>(2 * model.config().conv_layers);

  std::vector<std::size_t> order = fit;
  typename Model::Trace trace;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(config.batch_size));
      const float scale = 1.0f / static_cast<float>(b1 - b0);
      auto grads = zero_gradients(model.params());

      // conv stage once per distinct frame in the batch
      FeatureMap feats;
      std::map<std::size_t, ConvTrace<float>> traces;
      std::map<std::size_t, std::vector<float>> dfeat;
      if (conv_trainable) {
        for (std::size_t i = b0; i < b1; ++i)
          for (std::size_t f : used_frames(model, data.samples[order[i]]))
            if (!feats.count(f)) feats.emplace(f, model.frame_features((*data.frames)[f], &traces[f]));
      }
      const FeatureMap& fm = conv_trainable ? feats : frozen;

      std::vector<std::vector<float>> dsteps;
      for (std::size_t i = b0; i < b1; ++i) {
        const auto& s = data.samples[order[i]];
        const auto ptrs = feature_ptrs(model, s, fm);
        const double y = model.head_forward(ptrs, trace, &rng);
        const double err = y - targets[order[i]];
        loss_sum += std::abs(err);
        const float dy = err > 0 ? scale : (err < 0 ? -scale : 0.0f);
        if (dy == 0.0f) continue;
        model.head_backward(trace, dy, grads, conv_trainable ? &dsteps : nullptr);
        if (!conv_trainable) continue;
        const auto frames = used_frames(model, s);
        for (std::size_t t = 0; t < frames.size(); ++t) {
          if (dsteps[t].empty()) continue;
          auto& acc = dfeat[frames[t]];
          if (acc.empty()) acc.assign(dsteps[t].size(), 0.0f);
          for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += dsteps[t][k];
        }
      }
      for (const auto& [f, d] : dfeat)
        conv_backward<float>(model.features_shape(), model.conv_groups(), (*data.frames)[f], traces.at(f), d,
                             std::span<std::vector<float>>(grads.data(), conv_groups));
      adam.step(model.params(), grads);
    }

    EpochStats stats{epoch, loss_sum / static_cast<double>(fit.size()), 0.0};
    stats.val_loss = val.empty() ? stats.train_loss : subset_mae(model, data, val, targets, cache);
    if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss))
      throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch));
    report.epochs.push_back(stats);
    report.stopped_epoch = epoch;
    if (config.on_epoch) config.on_epoch(epoch, stats.train_loss, stats.val_loss);

    if (config.stop_at_train_loss && stats.train_loss <= 2.0 * *config.stop_at_train_loss &&
        subset_mae(model, data, fit, targets, cache) <= *config.stop_at_train_loss) {
      report.stop_reason = "target training loss reached";
      report.best_epoch = epoch;
      best = -1.0;  // keep the current weights
      break;
    }
    if (stats.val_loss < best) {
      best = stats.val_loss;
      report.best_epoch = epoch;
      since_best = 0;
      if (config.restore_best) best_params = model.params();
    } else if (++since_best >= config.patience) {
      report.stop_reason = "early stopping";
      break;
    }
  }
  if (report.stop_reason.empty()) report.stop_reason = "max epochs";
  if (config.restore_best && best >= 0.0) model.params() = std::move(best_params);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

template std::vector<double> predict_all(const LrcnModel<float>&, const Dataset&);
template std::vector<double> predict_all(const RetailNetModel<float>&, const Dataset&);
template EvalReport evaluate(const LrcnModel<float>&, const Dataset&, LabelMode);
template EvalReport evaluate(const RetailNetModel<float>&, const Dataset&, LabelMode);
template TrainReport train(LrcnModel<float>&, const Dataset&, const TrainConfig&);
template TrainReport train(RetailNetModel<float>&, const Dataset&, const TrainConfig&);

StrategyResult run_strategy(Strategy strategy, const Dataset& data, const StrategyInputs& inputs,
                            const TrainConfig& config) {
  config.validate();
  inputs.model.validate();
  for (const auto& s : data.samples)
    if (static_cast<int>(s.frames.size()) != inputs.model.seq_len)
      throw ConfigError("dataset sequence length " + std::to_string(s.frames.size()) +
                        " does not match model T=" + std::to_string(inputs.model.seq_len));
  const auto keys = data.targets(config.label_mode);
  const SplitIndices split = stratified_split(keys, config.split_fraction, config.seed);
  const Dataset train_set = data.subset(split.train);
  const Dataset test_set = data.subset(split.test);

  TrainConfig cfg = config;
  cfg.strategy = strategy;
  StrategyResult result;
  switch (strategy) {
    case Strategy::scratch:
      result.model = LrcnModel<float>::build(inputs.model, config.seed);
      result.model.set_conv_frozen(false);
      break;
    case Strategy::transfer:
      if (!inputs.base_conv) throw ConfigError("transfer needs base conv weights");
      result.model = LrcnModel<float>::build(inputs.model, config.seed);
      result.model.transfer_conv_weights(*inputs.base_conv);
      break;
    case Strategy::fine_tune:
      if (inputs.start) {
        result.model = *inputs.start;
      } else if (inputs.base_conv) {
        result.model = LrcnModel<float>::build(inputs.model, config.seed);
        result.model.transfer_conv_weights(*inputs.base_conv);
        TrainConfig first = config;
        first.strategy = Strategy::transfer;
        first.on_epoch = nullptr;
        train(result.model, train_set, first);
      } else {
        throw ConfigError("fine_tune needs base conv weights or a transfer-trained model");
      }
      result.model.set_fine_tune();
      cfg.learning_rate = config.fine_tune_learning_rate;
      break;
  }
  result.report = train(result.model, train_set, cfg);
  if (test_set.size() > 0) result.report.test = evaluate(result.model, test_set, config.label_mode);
  return result;
}

std::string format_training_report(const TrainReport& report) {
  std::string out = "epoch,train_loss,val_loss\n";
  char line[96];
  for (const auto& e : report.epochs) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g\n", e.epoch, e.train_loss, e.val_loss);
    out += line;
  }
  return out;
}

void write_training_report(const std::filesystem::path& path, const TrainReport& report) {
  const std::string text = format_training_report(report);
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace pcount
