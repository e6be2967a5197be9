// Copyright 2026 The vidalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// vidalign: dataset generation, motion analysis, training, inference,
// evaluation and visualization behind one binary.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vidalign/core/log.hpp"
#include "vidalign/dataset/io.hpp"
#include "vidalign/dataset/motion.hpp"
#include "vidalign/dataset/synth.hpp"
#include "vidalign/evaluation/detections_io.hpp"
#include "vidalign/evaluation/fps.hpp"
#include "vidalign/evaluation/match.hpp"
#include "vidalign/evaluation/visualize.hpp"
#include "vidalign/pipeline/checkpoint.hpp"
#include "vidalign/pipeline/infer.hpp"
#include "vidalign/pipeline/train.hpp"

namespace fs = std::filesystem;
using namespace vidalign;

namespace {

using Scalar = float;

enum ExitCode : int { kOk = 0, kInternal = 1, kConfig = 2, kData = 3, kCheckpoint = 4 };

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  internal or unexpected error\n"
    "  2  usage or configuration error (bad flag, unknown or mistyped key)\n"
    "  3  data error (missing or malformed dataset, detections or images)\n"
    "  4  checkpoint error (missing, corrupt, or architecture mismatch)\n"
    "Errors are printed to stderr as one JSON line: {\"error\":KIND,\"message\":TEXT}";

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << std::endl;
  return code;
}

pipeline::PipelineConfig resolve(const Options& o) {
  auto sets = o.sets;
  if (o.seed) sets.push_back("seed=" + std::to_string(*o.seed));
  return pipeline::load_config(o.config, sets);
}

fs::path prepare_out(const Options& o, const pipeline::PipelineConfig& cfg) {
  if (o.out.empty()) throw ConfigError("--out is required");
  const fs::path out(o.out);
  fs::create_directories(out);
  std::ofstream snap(out / "config.json");
  if (!snap) throw DataError("cannot write '" + (out / "config.json").string() + "'");
  snap << pipeline::to_json(cfg).dump(2) << '\n';
  return out;
}

std::string require_key(const std::string& value, const char* key) {
  if (value.empty()) throw ConfigError(std::string("config key '") + key + "' must be set for this command");
  return value;
}

std::vector<dataset::VideoSequence> load_data(const pipeline::PipelineConfig& cfg) {
  auto seqs = dataset::load_dataset(require_key(cfg.data_root, "data.root"));
  if (seqs.empty()) throw DataError("no sequences under '" + cfg.data_root + "'");
  return seqs;
}

void write_csv_header(std::ofstream& out, const char* header) {
  out << header << '\n';
  out.precision(17);
}

// ---- subcommands ----------------------------------------------------------

int run_generate(const Options& o) {
  const auto cfg = resolve(o);
  const fs::path out = prepare_out(o, cfg);
  auto seqs = dataset::generate_dataset(cfg.synth, cfg.synth_num_sequences, cfg.synth_id_prefix);
  for (auto& s : seqs) dataset::save_sequence(s, out);
  log::info("generated " + std::to_string(seqs.size()) + " sequences under " + out.string());
  return kOk;
}

int run_analyze(const Options& o) {
  const auto cfg = resolve(o);
  const auto seqs = load_data(cfg);
  const fs::path out = prepare_out(o, cfg);
  std::ofstream scores(out / "motion_iou.csv");
  write_csv_header(scores, "sequence,track,frame,motion_iou");
  std::vector<dataset::MotionScore> all;
  for (const auto& s : seqs)
    for (const auto& m : dataset::motion_iou(s, cfg.analysis_window)) {
      scores << s.id << ',' << m.track << ',' << m.frame << ',' << m.motion_iou << '\n';
      all.push_back(m);
    }
  const dataset::SpeedBins bins{cfg.analysis_slow_above, cfg.analysis_fast_at_most};
  const auto h = dataset::speed_histogram(std::span<const dataset::MotionScore>(all), bins);
  std::ofstream hist(out / "speed_histogram.csv");
  write_csv_header(hist, "bin,proportion,count");
  hist << "slow," << h.slow << ',' << h.count << '\n'
       << "medium," << h.medium << ',' << h.count << '\n'
       << "fast," << h.fast << ',' << h.count << '\n';
  dataset::write_png(dataset::plot_speed_histogram(h), out / "speed_histogram.png");
  std::printf("mean_motion_iou=%.6f slow=%.4f medium=%.4f fast=%.4f count=%d\n",
              dataset::mean_motion_iou(std::span<const dataset::MotionScore>(all)), h.slow, h.medium, h.fast, h.count);
  return kOk;
}

int run_train(const Options& o) {
  const auto cfg = resolve(o);
  const auto seqs = load_data(cfg);
  const fs::path out = prepare_out(o, cfg);
  const auto pairs = pipeline::make_pairs(seqs);
  if (pairs.empty()) throw DataError("dataset holds no frame pairs (every sequence has one frame)");

  pipeline::VideoDetector<Scalar> model(cfg.model);
  model.init(cfg.seed);
  std::ofstream csv(out / "loss.csv");
  if (!csv) throw DataError("cannot write '" + (out / "loss.csv").string() + "'");
  write_csv_header(csv, "epoch,step,detection,contrastive,total");
  pipeline::TrainHooks hooks;
  hooks.on_step = [&](const pipeline::LossRow& r) {
    csv << r.epoch << ',' << r.step << ',' << r.loss.detection << ',' << r.loss.contrastive << ',' << r.loss.total << '\n';
  };
  hooks.on_epoch_end = [&](int epoch) {
    log::info("epoch " + std::to_string(epoch + 1) + "/" + std::to_string(cfg.optim.epochs) + " done");
    return false;
  };
  pipeline::train<Scalar>(model, pairs, cfg, hooks);
  csv.flush();
  pipeline::save_checkpoint(model, cfg, out / "checkpoint.bin");
  return kOk;
}

pipeline::Checkpoint<Scalar> load_model(const pipeline::PipelineConfig& cfg) {
  return pipeline::load_checkpoint<Scalar>(require_key(cfg.model_checkpoint, "model.checkpoint"), &cfg.model);
}

int run_infer(const Options& o) {
  const auto cfg = resolve(o);
  const auto ck = load_model(cfg);
  const auto seqs = load_data(cfg);
  const fs::path out = prepare_out(o, cfg);
  // Inference settings come from the invocation; the weights from the checkpoint.
  for (const auto& s : seqs) {
    std::vector<std::vector<Detection>> frames;
    for (const auto& r : pipeline::infer_video(s, ck.model, cfg)) frames.push_back(r.detections);
    evaluation::write_detections_jsonl(frames, out / (s.id + ".jsonl"));
  }
  return kOk;
}

std::vector<std::vector<Detection>> load_predictions(const pipeline::PipelineConfig& cfg,
                                                     const dataset::VideoSequence& s) {
  auto frames = evaluation::read_detections_jsonl(fs::path(require_key(cfg.data_detections, "data.detections")) /
                                                  (s.id + ".jsonl"));
  if (static_cast<int>(frames.size()) != s.size())
    throw DataError("detections for '" + s.id + "' cover " + std::to_string(frames.size()) + " frames, sequence has " +
                    std::to_string(s.size()));
  for (auto& f : frames)
    std::erase_if(f, [&](const Detection& d) { return d.score < cfg.eval_score_threshold; });
  return frames;
}

int run_eval(const Options& o) {
  const auto cfg = resolve(o);
  const auto seqs = load_data(cfg);
  const fs::path out = prepare_out(o, cfg);
  const auto rule = evaluation::parse_rule(cfg.eval_criterion, cfg.eval_iou_threshold);
  std::ofstream csv(out / "metrics.csv");
  write_csv_header(csv, evaluation::kMetricsHeader);
  evaluation::Counts total;
  for (const auto& s : seqs) {
    const auto preds = load_predictions(cfg, s);
    evaluation::Counts c;
    for (int f = 0; f < s.size(); ++f) {
      const auto gts = s.boxes(f);
      c += evaluation::match_detections(preds[f], gts, rule);
    }
    evaluation::write_metrics_row(csv, s.id, rule, cfg.eval_score_threshold, c);
    total.tp += c.tp;
    total.fp += c.fp;
    total.fn += c.fn;
  }
  evaluation::write_metrics_row(csv, "all", rule, cfg.eval_score_threshold, total);
  const auto sc = evaluation::precision_recall_f1(total);
  std::printf("precision=%.4f recall=%.4f f1=%.4f\n", sc.precision, sc.recall, sc.f1);

  if (!cfg.model_checkpoint.empty()) {
    const auto ck = load_model(cfg);
    const auto rep = evaluation::fps_benchmark(ck.model, seqs.front(), cfg, cfg.fps_warmup, cfg.fps_repeats);
    std::ofstream fps(out / "fps.csv");
    write_csv_header(fps, "sequence,timed_frames,repeats,fps_mean,fps_std");
    fps << seqs.front().id << ',' << rep.timed_frames << ',' << rep.runs.size() << ',' << rep.mean << ',' << rep.stddev
        << '\n';
    std::printf("fps=%.2f+-%.2f\n", rep.mean, rep.stddev);
  }
  return kOk;
}

int run_visualize(const Options& o) {
  const auto cfg = resolve(o);
  const auto seqs = load_data(cfg);
  const fs::path out = prepare_out(o, cfg);
  const auto rule = evaluation::parse_rule(cfg.eval_criterion, cfg.eval_iou_threshold);
  for (const auto& s : seqs) {
    const auto preds = load_predictions(cfg, s);
    fs::create_directories(out / s.id);
    for (int f = 0; f < s.size(); ++f) {
      const auto gts = s.boxes(f);
      const auto m = evaluation::match_detections(preds[f], gts, rule);
      evaluation::visualize(s.frames[f], gts, preds[f], m, out / s.id / dataset::frame_filename(f));
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vidalign: one-reference-frame video object detection"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  std::string verbosity = "info";
  app.add_option("--log", verbosity, "Log level: debug, info, warn, off")->check(CLI::IsMember({"debug", "info", "warn", "off"}));

  Options opt;
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Command commands[] = {
      {"generate", "Write a synthetic video dataset to --out", run_generate},
      {"analyze", "Motion IoU scores and speed histogram of data.root", run_analyze},
      {"train", "Train on data.root; writes loss.csv and checkpoint.bin", run_train},
      {"infer", "Per-frame detections JSONL for every sequence of data.root", run_infer},
      {"eval", "Metrics CSV of data.detections against data.root", run_eval},
      {"visualize", "Overlay PNGs of data.detections on data.root", run_visualize},
  };
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opt.config, "JSON config file; missing keys keep their defaults");
    sub->add_option("--set", opt.sets, "Override a dotted config key, e.g. --set optim.epochs=10 (repeatable)");
    sub->add_option("--out", opt.out, "Output directory")->required();
    sub->add_option("--seed", opt.seed, "Alias for --set seed=N");
    sub->footer(kExitCodes);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kConfig);
  }

  log::set_level(verbosity == "debug" ? log::Level::debug
                 : verbosity == "warn" ? log::Level::warn
                 : verbosity == "off"  ? log::Level::off
                                       : log::Level::info);
  try {
    for (const auto& c : commands)
      if (app.got_subcommand(c.name)) return c.run(opt);
    return fail("usage", "no subcommand given", kConfig);
  } catch (const ConfigError& e) {
    return fail(e.kind(), e.what(), kConfig);
  } catch (const CheckpointError& e) {
    return fail(e.kind(), e.what(), kCheckpoint);
  } catch (const DataError& e) {
    return fail(e.kind(), e.what(), kData);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), kInternal);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kInternal);
  }
}
