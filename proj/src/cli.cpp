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
#include "pcount/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "pcount/annotation.hpp"
#include "pcount/checkpoint.hpp"
#include "pcount/dataset_io.hpp"
#include "pcount/errors.hpp"
#include "pcount/metrics.hpp"
#include "pcount/predictor.hpp"
#include "pcount/synthetic.hpp"
#include "pcount/training.hpp"

namespace fs = std::filesystem;

namespace pcount {
namespace {

struct PipelineFlags {
  int lambda_c = kDefaultLambdaC;
  int eta = 100;
  double tau = 0.8;
  double beta = 0.1;
  int width = kFrameWidth;
  int height = kFrameHeight;
  int fps = 5;
  std::int64_t background_interval_ms = 1000;

  void add(CLI::App& app) {
    app.add_option("--lambda-c", lambda_c, "quantization levels per channel")->capture_default_str();
    app.add_option("--eta", eta, "background ring length (frames)")->capture_default_str();
    app.add_option("--tau", tau, "background update gate fraction")->capture_default_str();
    app.add_option("--beta", beta, "foreground gray threshold")->capture_default_str();
    app.add_option("--width", width, "working frame width")->capture_default_str();
    app.add_option("--height", height, "working frame height")->capture_default_str();
    app.add_option("--fps", fps, "input frame rate, used for timestamps")->capture_default_str();
    app.add_option("--bg-interval-ms", background_interval_ms, "background sampling interval")->capture_default_str();
  }
};

std::vector<std::pair<std::int64_t, fs::path>> numbered_files(const fs::path& dir, std::initializer_list<const char*> exts) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::pair<std::int64_t, fs::path>> out;
  for (const auto& f : fs::directory_iterator(dir)) {
    const auto ext = f.path().extension().string();
    if (std::find(exts.begin(), exts.end(), ext) == exts.end()) continue;
    try {
      out.emplace_back(std::stoll(f.path().stem().string()), f.path());
    } catch (const std::exception&) {
      throw FormatError("frame file name is not a frame id: " + f.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> video_dirs(const fs::path& root) {
  if (!fs::is_directory(root / "videos")) throw IoError("missing directory " + (root / "videos").string());
  std::vector<std::string> out;
  for (const auto& d : fs::directory_iterator(root / "videos"))
    if (d.is_directory()) out.push_back(d.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

// Background fed on its own clock; P computed against the model before the
// frame itself is ingested.
struct Preprocessor {
  PipelineFlags flags;
  BackgroundModel model;
  std::optional<std::int64_t> next_ms;

  explicit Preprocessor(const PipelineFlags& f)
      : flags(f), model({f.width, f.height}, f.lambda_c, f.eta, f.tau) {
    if (!(f.beta > 0.0 && f.beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  }

  std::optional<RgbpFrame> step(const RawFrame& raw) {
    RawFrame rgb = resample(raw, model.size());
    const QuantizedFrame q = quantize(rgb, flags.lambda_c);
    std::optional<RgbpFrame> out;
    if (model.initialized()) out = assemble_rgbp(std::move(rgb), model.foreground(q, {flags.beta}));
    if (!next_ms || raw.timestamp_ms >= *next_ms) {
      model.ingest(q);
      next_ms = raw.timestamp_ms + flags.background_interval_ms;
    }
    return out;
  }
};

int cmd_preprocess(const fs::path& in, const fs::path& out_root, const PipelineFlags& flags, std::ostream& out) {
  std::size_t written = 0;
  for (const auto& video : video_dirs(in)) {
    const fs::path src = in / "videos" / video;
    const fs::path dst = out_root / "videos" / video;
    fs::create_directories(dst / "frames");
    std::optional<LabelTable> labels;
    if (fs::exists(src / "labels.csv")) {
      labels = read_label_table(src / "labels.csv");
      fs::copy_file(src / "labels.csv", dst / "labels.csv", fs::copy_options::overwrite_existing);
    }
    Preprocessor pre(flags);
    for (const auto& [id, path] : numbered_files(src / "frames", {".ppm", ".pgm"})) {
      RawFrame f = read_pnm(path);
      const LabelRow* row = labels ? labels->find(id) : nullptr;
      f.index = id;
      f.timestamp_ms = row ? row->timestamp_ms : id * 1000 / flags.fps;
      if (auto rgbp = pre.step(f)) {
        write_rgbp(dst / "frames" / (std::to_string(id) + ".rgbp"), *rgbp);
        ++written;
      }
    }
  }
  out << "wrote " << written << " RGBP frames to " << out_root.string() << "\n";
  return kExitOk;
}

std::string to_pgm_mask(const PChannel& p) {
  std::string s = "P5\n" + std::to_string(p.width) + " " + std::to_string(p.height) + "\n255\n";
  for (auto b : p.bits) s.push_back(static_cast<char>(b ? 255 : 0));
  return s;
}

int cmd_synth(const fs::path& out_root, const std::string& video, SceneConfig scene, std::ostream& out) {
  scene.validate();
  const fs::path dir = out_root / "videos" / video;
  fs::create_directories(dir / "frames");
  fs::create_directories(dir / "masks");
  SceneGenerator gen(scene);
  GroundTruth gt;
  while (!gen.done()) {
    const int k = gen.frame_index();
    const SceneFrame f = gen.next();
    write_ppm(dir / "frames" / (std::to_string(k) + ".ppm"), f.rgb);
    const std::string mask = to_pgm_mask(f.mask);
    write_file(dir / "masks" / (std::to_string(k) + ".pgm"), std::vector<std::uint8_t>(mask.begin(), mask.end()));
    gt.total.push_back(f.total);
    gt.customers.push_back(f.customers);
  }
  write_label_table(dir / "labels.csv", label_stream(gt, scene.fps));
  out << "wrote " << scene.frames << " frames of video " << video << " to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_import(const fs::path& root, const fs::path& manifest_path, int stride, int seq_len, LabelMode mode,
               std::ostream& out) {
  const SequenceManifest m = import_dataset(root, stride, seq_len);
  write_manifest(manifest_path, m);
  out << "sequences " << m.sequences.size() << "\n";
  for (const auto& [count, n] : label_distribution(m, mode)) out << "label " << count << ": " << n << "\n";
  return kExitOk;
}

struct TrainFlags {
  std::string model_kind = "lrcn";
  std::string strategy = "scratch";
  std::string label_mode = "all_people";
  std::uint64_t seed = 0;
  std::optional<int> seq_len;
  int filters = 8;
  int kernel = 5;
  std::vector<int> units{250};
  int epochs = 100;
  int batch = 16;
  int patience = 10;
  double lr = 1e-3;
  double split = 0.7;
  std::optional<fs::path> report;
};

void print_eval(const EvalReport& r, std::ostream& out) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "E=%.6f MAE=%.6f n=%zu", r.relative_error, r.mae, r.n);
  out << buf << "\n";
}

int cmd_train(const fs::path& manifest_path, const fs::path& ckpt_out, const std::optional<fs::path>& base,
              const TrainFlags& f, std::ostream& out) {
  const SequenceManifest manifest = read_manifest(manifest_path);
  if (f.seq_len && *f.seq_len != manifest.seq_len)
    throw ConfigError("--seq-len " + std::to_string(*f.seq_len) + " does not match manifest T=" +
                      std::to_string(manifest.seq_len));
  const Dataset data = Dataset::from_manifest(manifest);
  if (data.size() == 0) throw RangeError("manifest has no sequences");
  const Shape3 shape = (*data.frames)[0].shape;

  TrainConfig tc;
  tc.learning_rate = f.lr;
  tc.batch_size = f.batch;
  tc.max_epochs = f.epochs;
  tc.patience = f.patience;
  tc.split_fraction = f.split;
  tc.seed = f.seed;
  tc.label_mode = parse_label_mode(f.label_mode);
  tc.on_epoch = [&out](int e, double tl, double vl) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "epoch %d train %.5f val %.5f", e, tl, vl);
    out << buf << "\n";
  };

  TrainReport report;
  if (f.model_kind == "retailnet") {
    RetailNetConfig rc;
    rc.filters = f.filters;
    rc.kernel = f.kernel;
    rc.input_channels = shape.channels;
    rc.input_height = shape.height;
    rc.input_width = shape.width;
    auto model = RetailNetModel<float>::build(rc, f.seed);
    const auto split = stratified_split(data.targets(tc.label_mode), tc.split_fraction, tc.seed);
    report = train(model, data.subset(split.train), tc);
    report.test = evaluate(model, data.subset(split.test), tc.label_mode);
    save_model(ckpt_out, model);
  } else if (f.model_kind == "lrcn") {
    StrategyInputs in;
    in.model.filters = f.filters;
    in.model.kernel = f.kernel;
    in.model.lstm_units = f.units;
    in.model.seq_len = manifest.seq_len;
    in.model.input_channels = shape.channels;
    in.model.input_height = shape.height;
    in.model.input_width = shape.width;
    const Strategy strategy = parse_strategy(f.strategy);
    if (strategy != Strategy::scratch) {
      if (!base) throw ConfigError(std::string(to_string(strategy)) + " needs --checkpoint with a trained model");
      const AnyModel m = load_model(*base);
      if (strategy == Strategy::fine_tune && std::holds_alternative<LrcnModel<float>>(m))
        in.start = std::get<LrcnModel<float>>(m);
      else
        in.base_conv = conv_weights_of(m);
      if (in.start && in.start->seq_len() != manifest.seq_len)
        throw ConfigError("checkpoint T=" + std::to_string(in.start->seq_len()) + " does not match manifest T=" +
                          std::to_string(manifest.seq_len));
      if (in.start) in.model = in.start->config();
    }
    StrategyResult r = run_strategy(strategy, data, in, tc);
    save_model(ckpt_out, r.model);
    report = std::move(r.report);
  } else {
    throw ConfigError("unknown model kind '" + f.model_kind + "'");
  }
  if (f.report) write_training_report(*f.report, report);
  out << "stopped after epoch " << report.stopped_epoch << " (" << report.stop_reason << "), best epoch "
      << report.best_epoch << ", trainable params " << report.trainable_params << "\n";
  if (report.test) {
    out << "test ";
    print_eval(*report.test, out);
  }
  out << "checkpoint " << ckpt_out.string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const fs::path& manifest_path, const fs::path& ckpt, const fs::path& out_prefix,
                 const std::string& label_mode, std::optional<std::uint64_t> test_split_seed, double split,
                 std::ostream& out) {
  const SequenceManifest manifest = read_manifest(manifest_path);
  Dataset data = Dataset::from_manifest(manifest);
  const LabelMode mode = parse_label_mode(label_mode);
  if (test_split_seed) data = data.subset(stratified_split(data.targets(mode), split, *test_split_seed).test);
  const AnyModel model = load_model(ckpt);
  const EvalReport r = std::visit(
      [&](const auto& m) {
        if (m.seq_len() != 1 && m.seq_len() != manifest.seq_len)
          throw ConfigError("checkpoint T=" + std::to_string(m.seq_len()) + " does not match manifest T=" +
                            std::to_string(manifest.seq_len));
        return evaluate(m, data, mode);
      },
      model);
  const std::string json_path = out_prefix.string() + ".json";
  const std::string csv_path = out_prefix.string() + "_hist.csv";
  if (out_prefix.has_parent_path()) fs::create_directories(out_prefix.parent_path());
  write_report(r, json_path, csv_path);
  print_eval(r, out);
  out << "histogram " << csv_path << "\n";
  return kExitOk;
}

int cmd_predict(const fs::path& ckpt, const std::optional<fs::path>& in_dir, const std::optional<fs::path>& events,
                const PipelineFlags& flags, int stride, std::optional<int> seq_len, std::istream& in,
                std::ostream& out) {
  auto model = std::make_shared<const LrcnModel<float>>(load_lrcn(ckpt));
  if (seq_len && *seq_len != model->seq_len())
    throw ConfigError("--seq-len " + std::to_string(*seq_len) + " does not match checkpoint T=" +
                      std::to_string(model->seq_len()));
  PredictorConfig pc;
  pc.lambda_c = flags.lambda_c;
  pc.eta = flags.eta;
  pc.tau = flags.tau;
  pc.foreground.beta = flags.beta;
  pc.background_interval_ms = flags.background_interval_ms;
  pc.stride = stride;
  Predictor predictor(model, pc);

  std::ofstream file;
  if (events) {
    file.open(*events);
    if (!file) throw IoError("cannot write " + events->string());
  }
  std::ostream& sink = events ? static_cast<std::ostream&>(file) : out;
  std::size_t n = 0;
  auto feed = [&](RawFrame f) {
    if (auto p = predictor.ingest(f)) {
      sink << format_prediction_event(*p) << "\n";
      ++n;
    }
  };
  if (in_dir) {
    for (const auto& [id, path] : numbered_files(*in_dir, {".ppm", ".pgm"})) {
      RawFrame f = read_pnm(path);
      f.index = id;
      f.timestamp_ms = id * 1000 / flags.fps;
      feed(std::move(f));
    }
  } else {
    for (std::int64_t k = 0;; ++k) {
      auto f = read_pnm(in, "standard input");
      if (!f) break;
      f->index = k;
      f->timestamp_ms = k * 1000 / flags.fps;
      feed(std::move(*f));
    }
  }
  sink.flush();
  if (events) out << n << " predictions written to " << events->string() << "\n";
  return kExitOk;
}

AnnotationServer* g_server = nullptr;

int cmd_serve(const fs::path& root, const std::string& host, int port, int fps, std::ostream& out) {
  AnnotationStore store(root, fps);
  AnnotationServer server(store);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  out << "serving " << root.string() << " on http://" << host << ":" << port << "\n" << std::flush;
  const bool ok = server.listen(host, port);
  g_server = nullptr;
  if (!ok) throw IoError("could not listen on " + host + ":" + std::to_string(port));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"People counting toolkit: background model, RGBP preprocessing, LRCN training and prediction"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // preprocess
  PipelineFlags pre_flags;
  fs::path pre_in, pre_out;
  auto* pre = app.add_subcommand("preprocess", "RGB frames to RGBP frames through the background model");
  pre->add_option("--in", pre_in, "dataset root with videos/<id>/frames/*.ppm")->required();
  pre->add_option("--out", pre_out, "output dataset root")->required();
  pre_flags.add(*pre);

  // synth
  SceneConfig scene;
  fs::path synth_out;
  std::string synth_video = "synth";
  auto* syn = app.add_subcommand("synth", "render a synthetic scene with labels and masks");
  syn->add_option("--out", synth_out, "output dataset root")->required();
  syn->add_option("--video", synth_video, "video id")->capture_default_str();
  syn->add_option("--frames", scene.frames)->capture_default_str();
  syn->add_option("--fps", scene.fps)->capture_default_str();
  syn->add_option("--width", scene.width)->capture_default_str();
  syn->add_option("--height", scene.height)->capture_default_str();
  syn->add_option("--actors", scene.actors)->capture_default_str();
  syn->add_option("--uniform-fraction", scene.uniform_fraction, "share of actors in uniform")->capture_default_str();
  syn->add_option("--seed", scene.seed)->capture_default_str();

  // import
  fs::path imp_root, imp_out;
  int imp_stride = kDefaultStride, imp_seq = 9;
  std::string imp_mode = "all_people";
  auto* imp = app.add_subcommand("import", "build a sequence manifest from an RGBP dataset");
  imp->add_option("--in", imp_root, "dataset root with videos/<id>/frames/*.rgbp")->required();
  imp->add_option("--out", imp_out, "manifest path")->required();
  imp->add_option("--stride", imp_stride)->capture_default_str();
  imp->add_option("--seq-len", imp_seq)->capture_default_str();
  imp->add_option("--label-mode", imp_mode)->capture_default_str();

  // train
  TrainFlags tf;
  fs::path tr_manifest, tr_out;
  std::optional<fs::path> tr_base;
  auto* tr = app.add_subcommand("train", "train a counting model on a manifest");
  tr->add_option("--manifest", tr_manifest)->required();
  tr->add_option("--out", tr_out, "checkpoint to write")->required();
  tr->add_option("--checkpoint", tr_base, "base model for transfer or fine_tune");
  tr->add_option("--model", tf.model_kind, "lrcn or retailnet")->capture_default_str();
  tr->add_option("--strategy", tf.strategy, "scratch, transfer or fine_tune")->capture_default_str();
  tr->add_option("--label-mode", tf.label_mode)->capture_default_str();
  tr->add_option("--seed", tf.seed)->capture_default_str();
  tr->add_option("--seq-len", tf.seq_len, "must match the manifest");
  tr->add_option("--filters", tf.filters)->capture_default_str();
  tr->add_option("--kernel", tf.kernel)->capture_default_str();
  tr->add_option("--units", tf.units, "LSTM units per layer")->capture_default_str();
  tr->add_option("--epochs", tf.epochs)->capture_default_str();
  tr->add_option("--batch", tf.batch)->capture_default_str();
  tr->add_option("--patience", tf.patience)->capture_default_str();
  tr->add_option("--lr", tf.lr)->capture_default_str();
  tr->add_option("--split", tf.split, "training share of the data")->capture_default_str();
  tr->add_option("--report", tf.report, "per-epoch CSV");

  // evaluate
  fs::path ev_manifest, ev_ckpt, ev_out = "eval";
  std::string ev_mode = "all_people";
  std::optional<std::uint64_t> ev_seed;
  double ev_split = 0.7;
  auto* ev = app.add_subcommand("evaluate", "score a checkpoint on a manifest");
  ev->add_option("--manifest", ev_manifest)->required();
  ev->add_option("--checkpoint", ev_ckpt)->required();
  ev->add_option("--out", ev_out, "report prefix (.json and _hist.csv)")->capture_default_str();
  ev->add_option("--label-mode", ev_mode)->capture_default_str();
  ev->add_option("--seed", ev_seed, "evaluate only the test split drawn with this seed");
  ev->add_option("--split", ev_split)->capture_default_str();

  // predict
  PipelineFlags pr_flags;
  fs::path pr_ckpt;
  std::optional<fs::path> pr_in, pr_out;
  int pr_stride = kDefaultStride;
  std::optional<int> pr_seq;
  auto* pr = app.add_subcommand("predict", "stream frames through the predictor");
  pr->add_option("--checkpoint", pr_ckpt)->required();
  pr->add_option("--in", pr_in, "directory of numbered PPM frames (default: PPM stream on stdin)");
  pr->add_option("--out", pr_out, "event log (default: stdout)");
  pr->add_option("--stride", pr_stride)->capture_default_str();
  pr->add_option("--seq-len", pr_seq, "must match the checkpoint");
  pr_flags.fps = 20;
  pr_flags.add(*pr);

  // serve-annotation
  fs::path sv_root;
  std::string sv_host = "127.0.0.1";
  int sv_port = 8080, sv_fps = 5;
  auto* sv = app.add_subcommand("serve-annotation", "HTTP backend for the labelling tool");
  sv->add_option("--root", sv_root, "dataset root")->required();
  sv->add_option("--host", sv_host)->capture_default_str();
  sv->add_option("--port", sv_port)->capture_default_str();
  sv->add_option("--fps", sv_fps)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*pre) return cmd_preprocess(pre_in, pre_out, pre_flags, out);
    if (*syn) return cmd_synth(synth_out, synth_video, scene, out);
    if (*imp) return cmd_import(imp_root, imp_out, imp_stride, imp_seq, parse_label_mode(imp_mode), out);
    if (*tr) return cmd_train(tr_manifest, tr_out, tr_base, tf, out);
    if (*ev) return cmd_evaluate(ev_manifest, ev_ckpt, ev_out, ev_mode, ev_seed, ev_split, out);
    if (*pr) return cmd_predict(pr_ckpt, pr_in, pr_out, pr_flags, pr_stride, pr_seq, in, out);
    if (*sv) return cmd_serve(sv_root, sv_host, sv_port, sv_fps, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace pcount
