/*
 * Copyright 2026 the asdkit authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "asdkit/grad_suite.hpp"
#include "asdkit/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace asdkit;

namespace {

void echo_config(const std::string& command, const json& resolved) {
  json j;
  j["command"] = command;
  j["resolved"] = resolved;
  std::cout << j.dump(2) << std::endl;
}

void write_artifacts(const std::string& out_dir, const json& resolved,
                     const std::vector<std::string>& files) {
  json j;
  j["resolved_config"] = resolved;
  j["artifacts"] = files;
  std::ofstream out(fs::path(out_dir) / "artifacts.json");
  out << j.dump(2) << '\n';
}

std::map<int, double> parse_mix(const std::string& text) {
  std::map<int, double> mix;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t colon = text.find(':', pos);
    check_arg(colon != std::string::npos, "mix: expected cond:prop pairs");
    std::size_t comma = text.find(',', colon);
    if (comma == std::string::npos) comma = text.size();
    mix[std::stoi(text.substr(pos, colon - pos))] =
        std::stod(text.substr(colon + 1, comma - colon - 1));
    pos = comma + 1;
  }
  return mix;
}

std::pair<double, double> parse_range(const std::string& text) {
  const std::size_t colon = text.find(':');
  if (colon == std::string::npos) {
    const double v = std::stod(text);
    return {v, v};
  }
  return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    if (comma > pos) out.push_back(text.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

PipelineConfig make_model_config(const std::string& scale, const std::string& drop,
                                 std::uint64_t model_seed) {
  PipelineConfig cfg =
      scale == "paper" ? PipelineConfig::paper(model_seed) : PipelineConfig::desk(model_seed);
  check_arg(scale == "paper" || scale == "desk", "scale must be paper or desk");
  check_arg(drop == "none" || drop == "cross" || drop == "self" || drop == "both",
            "drop must be none|cross|self|both");
  cfg.fusion.drop_cross = drop == "cross" || drop == "both";
  cfg.fusion.drop_self = drop == "self" || drop == "both";
  return cfg;
}

PipelineConfig config_from_checkpoint(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "meta.json");
  if (!in) throw IoError("checkpoint meta.json not found in " + dir);
  json meta = json::parse(in, nullptr, false);
  check_arg(!meta.is_discarded(), "checkpoint meta.json is malformed");
  return PipelineConfig::from_json(meta.at("config").dump());
}

TrainConfig make_train_config(float lr, float lr_decay, int epochs, int batch,
                              std::uint64_t seed, const std::string& frames,
                              const std::string& aug, const std::string& noise_dir,
                              bool visual_aug, int workers, double target_map) {
  TrainConfig cfg;
  cfg.lr0 = lr;
  cfg.lr_decay = lr_decay;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.seed = seed;
  cfg.workers = workers;
  cfg.target_map = target_map;
  cfg.visual_aug = visual_aug;
  cfg.verbose = true;
  if (frames != "variable") cfg.fixed_frames = std::stoi(frames);
  if (aug == "neg") {
    cfg.audio_aug = AudioAugKind::kNegativeSampling;
  } else if (aug == "noise") {
    check_arg(!noise_dir.empty(), "--aug noise requires --noise-dir");
    cfg.audio_aug = AudioAugKind::kExternalNoise;
    cfg.noise_dir = noise_dir;
  } else {
    check_arg(aug == "none", "--aug must be neg|noise|none");
  }
  return cfg;
}

json train_flags_json(const std::string& scale, const std::string& drop, const TrainConfig& cfg) {
  return json{{"scale", scale},       {"drop", drop},
              {"lr0", cfg.lr0},       {"lr_decay", cfg.lr_decay},
              {"epochs", cfg.epochs}, {"batch_size", cfg.batch_size},
              {"seed", cfg.seed},     {"fixed_frames", cfg.fixed_frames},
              {"workers", cfg.workers}};
}

int cmd_gen_data(int n, const std::string& mix_text, const std::string& duration,
                 const std::string& out, std::uint64_t seed, bool virtual_clips,
                 const std::string& face_width, double fps, int sr) {
  DatasetSpec spec;
  spec.n_clips = n;
  spec.condition_mix = parse_mix(mix_text);
  std::tie(spec.duration_lo_s, spec.duration_hi_s) = parse_range(duration);
  spec.seed = seed;
  spec.materialize = !virtual_clips;
  spec.fps = static_cast<float>(fps);
  spec.sample_rate = sr;
  const auto [wlo, whi] = parse_range(face_width);
  spec.face_width_lo = static_cast<int>(wlo);
  spec.face_width_hi = static_cast<int>(whi);

  json resolved{{"n", n},       {"mix", mix_text},   {"duration", duration},
                {"out", out},   {"seed", seed},      {"virtual", virtual_clips},
                {"fps", fps},   {"sr", sr},          {"face_width", face_width}};
  echo_config("gen-data", resolved);

  const std::string manifest_path = build_dataset(spec, out);
  Manifest m = load_manifest(manifest_path);
  std::map<int, int> counts;
  std::int64_t speaking_frames = 0, total_frames = 0;
  for (const auto& e : m.entries) {
    counts[e.condition]++;
    total_frames += e.t;
    if (e.label == 1) speaking_frames += e.t;
  }
  std::cout << "wrote " << m.entries.size() << " clips to " << out << '\n';
  for (const auto& [cond, cnt] : counts) {
    std::cout << "  condition " << cond << ": " << cnt << " clips\n";
  }
  std::cout << "speaking-frame fraction: "
            << static_cast<double>(speaking_frames) / static_cast<double>(total_frames) << '\n';
  std::cout << "manifest: " << manifest_path << std::endl;
  write_artifacts(out, resolved, {manifest_path, (fs::path(out) / "annotations.csv").string()});
  return 0;
}

int cmd_train(const std::string& train_manifest, const std::string& val_manifest,
              const std::string& out, const std::string& scale, const std::string& drop,
              std::uint64_t model_seed, const TrainConfig& cfg) {
  json resolved = train_flags_json(scale, drop, cfg);
  resolved["train_manifest"] = train_manifest;
  resolved["val_manifest"] = val_manifest;
  resolved["out"] = out;
  resolved["model_seed"] = model_seed;
  echo_config("train", resolved);

  Pipeline model(make_model_config(scale, drop, model_seed));
  std::cout << "parameters: " << model.params().count() << std::endl;
  Manifest train_m = load_manifest(train_manifest);
  Manifest val_m;
  if (!val_manifest.empty()) val_m = load_manifest(val_manifest);

  fs::create_directories(out);
  {
    std::ofstream cfg_out(fs::path(out) / "resolved_config.json");
    cfg_out << resolved.dump(2) << '\n';
    std::ofstream model_out(fs::path(out) / "model_config.json");
    model_out << model.config().to_json() << '\n';
  }
  TrainResult res = train(model, train_m, val_m, cfg, out);
  std::cout << "best val mAP " << res.best_map << " at epoch " << res.best_epoch << '\n'
            << "checkpoint: " << res.checkpoint_dir << std::endl;
  write_artifacts(out, resolved,
                  {(fs::path(out) / "metrics.jsonl").string(), res.checkpoint_dir,
                   (fs::path(out) / "model_config.json").string()});
  return 0;
}

int cmd_eval(const std::string& manifest, const std::string& checkpoint, const std::string& out,
             const std::string& scores_csv, int frames, double noise_snr, bool with_noise,
             std::uint64_t noise_seed, int workers) {
  json resolved{{"manifest", manifest},   {"checkpoint", checkpoint}, {"out", out},
                {"frames", frames},       {"noise", with_noise},      {"noise_snr", noise_snr},
                {"noise_seed", noise_seed}};
  echo_config("eval", resolved);

  Pipeline model(config_from_checkpoint(checkpoint));
  load_checkpoint(model, nullptr, checkpoint);
  Manifest m = load_manifest(manifest);
  std::optional<float> corrupt;
  if (with_noise) corrupt = static_cast<float>(noise_snr);
  std::vector<ScoredFrame> scored = score_manifest(model, m, workers, frames, corrupt, noise_seed);
  const std::string report = metrics_report_json(scored);
  std::ofstream rep(out);
  if (!rep) throw IoError("cannot write " + out);
  rep << report << '\n';
  if (!scores_csv.empty()) write_scores_csv(scored, scores_csv);
  std::cout << report << std::endl;
  return 0;
}

int cmd_infer(const std::string& checkpoint, const std::string& frames_path,
              const std::string& audio_path, const std::string& out, double fps) {
  json resolved{{"checkpoint", checkpoint}, {"frames", frames_path}, {"audio", audio_path},
                {"out", out},               {"fps", fps}};
  echo_config("infer", resolved);

  Pipeline model(config_from_checkpoint(checkpoint));
  load_checkpoint(model, nullptr, checkpoint);

  FaceFrameSequence faces;
  faces.frames = load_tnsr(frames_path);
  faces.fps = static_cast<float>(fps);
  check_arg(faces.frames.ndim() == 4, "frames tensor must be [T,1,112,112]");
  const int t = faces.length();
  Waveform audio = align_lengths(load_wav(audio_path), faces.fps, t);
  const MfccSequence mfcc = extract_mfcc(audio, t);
  const std::vector<real> s = model.score_clip(faces, mfcc);

  std::vector<ScoredFrame> scored(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) {
    scored[static_cast<std::size_t>(i)].clip_id = fs::path(frames_path).stem().string();
    scored[static_cast<std::size_t>(i)].frame_index = i;
    scored[static_cast<std::size_t>(i)].score = s[static_cast<std::size_t>(i)];
  }
  write_scores_csv(scored, out, false);
  std::cout << "wrote " << t << " frame scores to " << out << std::endl;
  return 0;
}

int cmd_grad_check(int seeds) {
  echo_config("grad-check", json{{"seeds", seeds}});
  const auto entries = run_grad_check_suite(seeds);
  bool ok = true;
  for (const auto& e : entries) {
    const bool pass = e.max_rel_error < 1e-2;
    ok = ok && pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << e.name << "  max_rel_error "
              << e.max_rel_error << '\n';
  }
  std::cout << (ok ? "all gradients verified" : "gradient check FAILED") << std::endl;
  return ok ? 0 : 1;
}

int cmd_rf_report(const std::string& scale) {
  echo_config("rf-report", json{{"scale", scale}});
  check_arg(scale == "paper" || scale == "desk", "scale must be paper or desk");
  const VisualEncoderConfig vis =
      scale == "paper" ? VisualEncoderConfig::paper() : VisualEncoderConfig::desk();
  const AudioEncoderConfig aud =
      scale == "paper" ? AudioEncoderConfig::paper() : AudioEncoderConfig::desk();
  const int vrf = compute_receptive_field(vis.temporal_layer_specs());
  const int arf = compute_receptive_field(aud.temporal_layer_specs());
  std::cout << "scale: " << scale << '\n';
  std::cout << "visual temporal receptive field: " << vrf << " frames (" << vrf * 40
            << " ms at 25 fps)\n";
  std::cout << "audio temporal receptive field: " << arf << " MFCC frames (" << arf * 10
            << " ms at 10 ms hop)\n";
  std::cout << "audio time downsampling: x" << aud.total_time_stride() << std::endl;
  return 0;
}

int cmd_ablate(const std::string& train_manifest, const std::string& eval_manifest,
               const std::string& out, const std::string& drop_list, const std::string& frames_list,
               const std::string& aug_list, bool eval_noise, double eval_noise_snr,
               const std::string& seeds_text, int epochs, int batch, float lr, int workers,
               double duration_budget_min) {
  const std::vector<std::string> drops = split_list(drop_list);
  const std::vector<std::string> frames = split_list(frames_list);
  const std::vector<std::string> augs = split_list(aug_list);
  int multi = 0;
  multi += drops.size() > 1;
  multi += frames.size() > 1;
  multi += augs.size() > 1;
  check_arg(multi == 1, "ablate: exactly one of --drop/--frames/--aug must list multiple values");
  const std::vector<std::string>& axis = drops.size() > 1 ? drops : (frames.size() > 1 ? frames : augs);
  const std::string axis_name = drops.size() > 1 ? "drop" : (frames.size() > 1 ? "frames" : "aug");

  std::vector<std::uint64_t> seeds;
  for (const std::string& s : split_list(seeds_text)) seeds.push_back(std::stoull(s));
  check_arg(!seeds.empty(), "ablate: need at least one seed");

  json resolved{{"train_manifest", train_manifest},
                {"eval_manifest", eval_manifest},
                {"out", out},
                {"axis", axis_name},
                {"values", axis},
                {"drop", drop_list},
                {"frames", frames_list},
                {"aug", aug_list},
                {"eval_noise", eval_noise},
                {"eval_noise_snr", eval_noise_snr},
                {"seeds", seeds},
                {"epochs", epochs},
                {"batch", batch},
                {"lr", lr},
                {"budget_min", duration_budget_min}};
  echo_config("ablate", resolved);

  Manifest train_m = load_manifest(train_manifest);
  Manifest eval_m = load_manifest(eval_manifest);
  fs::create_directories(out);

  json table = json::array();
  std::map<std::string, double> means;
  for (const std::string& value : axis) {
    const std::string drop = axis_name == "drop" ? value : drops[0];
    const std::string frame_mode = axis_name == "frames" ? value : frames[0];
    const std::string aug = axis_name == "aug" ? value : augs[0];
    double mean_map = 0;
    json runs = json::array();
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = make_train_config(lr, 0.95f, epochs, batch, seed, frame_mode, aug, "",
                                          false, workers, -1.0);
      cfg.verbose = true;
      Pipeline model(make_model_config("desk", drop, seed + 1));
      const std::string run_dir =
          (fs::path(out) / (axis_name + "_" + value + "_seed" + std::to_string(seed))).string();
      train(model, train_m, Manifest{}, cfg, run_dir);
      std::optional<float> corrupt;
      if (eval_noise) corrupt = static_cast<float>(eval_noise_snr);
      const std::vector<ScoredFrame> scored =
          score_manifest(model, eval_m, workers, cfg.fixed_frames, corrupt, seed + 99);
      const double map = average_precision(scored);
      mean_map += map;
      runs.push_back(json{{"seed", seed}, {"map", map}});
      std::cout << axis_name << "=" << value << " seed=" << seed << " mAP=" << map << std::endl;
    }
    mean_map /= static_cast<double>(seeds.size());
    means[value] = mean_map;
    table.push_back(json{{"value", value}, {"mean_map", mean_map}, {"runs", runs}});
  }

  std::cout << "\n=== " << axis_name << " comparison (mean over " << seeds.size() << " seeds) ===\n";
  for (const std::string& value : axis) {
    std::cout << "  " << axis_name << "=" << value << "  mAP " << means[value] << '\n';
  }

  json report;
  report["axis"] = axis_name;
  report["table"] = table;
  report["resolved"] = resolved;
  const std::string report_path = (fs::path(out) / "ablation_report.json").string();
  std::ofstream rep(report_path);
  rep << report.dump(2) << '\n';
  std::cout << "report: " << report_path << std::endl;
  write_artifacts(out, resolved, {report_path});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"audio-visual active speaker detection toolkit"};
  app.require_subcommand(1);
  argv = app.ensure_utf8(argv);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a labeled synthetic dataset");
  int gen_n = 100;
  std::string gen_mix = "1:0.5,2:0.5";
  std::string gen_duration = "1:6";
  std::string gen_out;
  std::uint64_t gen_seed = 0;
  bool gen_virtual = false;
  std::string gen_face_width = "64:96";
  double gen_fps = 25.0;
  int gen_sr = 16000;
  gen->add_option("--n", gen_n, "number of clips");
  gen->add_option("--mix", gen_mix, "condition proportions, e.g. 1:0.5,2:0.5");
  gen->add_option("--duration", gen_duration, "clip seconds, lo:hi");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_flag("--virtual", gen_virtual, "write only the recipe manifest, no clip files");
  gen->add_option("--face-width", gen_face_width, "face width px, lo:hi");
  gen->add_option("--fps", gen_fps, "video frame rate");
  gen->add_option("--sr", gen_sr, "audio sample rate");

  // train
  auto* tr = app.add_subcommand("train", "train the pipeline on a dataset manifest");
  std::string tr_train, tr_val, tr_out;
  std::string tr_scale = "desk", tr_drop = "none", tr_frames = "variable", tr_aug = "none";
  std::string tr_noise_dir;
  float tr_lr = 1e-4f, tr_decay = 0.95f;
  int tr_epochs = 20, tr_batch = 8, tr_workers = 2;
  std::uint64_t tr_seed = 0, tr_model_seed = 1;
  bool tr_visual_aug = false;
  double tr_target = -1.0;
  tr->add_option("--train-manifest", tr_train)->required();
  tr->add_option("--val-manifest", tr_val);
  tr->add_option("--out", tr_out)->required();
  tr->add_option("--scale", tr_scale, "model scale: desk|paper");
  tr->add_option("--drop", tr_drop, "ablate attention: none|cross|self|both");
  tr->add_option("--frames", tr_frames, "fixed frame count N or 'variable'");
  tr->add_option("--aug", tr_aug, "audio augmentation: none|neg|noise");
  tr->add_option("--noise-dir", tr_noise_dir, "wav directory for --aug noise");
  tr->add_flag("--visual-aug", tr_visual_aug, "flip/rotate/crop augmentation");
  tr->add_option("--lr", tr_lr);
  tr->add_option("--lr-decay", tr_decay);
  tr->add_option("--epochs", tr_epochs);
  tr->add_option("--batch", tr_batch);
  tr->add_option("--seed", tr_seed);
  tr->add_option("--model-seed", tr_model_seed);
  tr->add_option("--workers", tr_workers);
  tr->add_option("--target-map", tr_target, "stop once val mAP reaches this");

  // eval
  auto* ev = app.add_subcommand("eval", "score a manifest with a checkpoint");
  std::string ev_manifest, ev_checkpoint, ev_out = "metrics.json", ev_scores;
  int ev_frames = 0, ev_workers = 2;
  double ev_noise_snr = 0.0;
  bool ev_noise = false;
  std::uint64_t ev_noise_seed = 0;
  ev->add_option("--manifest", ev_manifest)->required();
  ev->add_option("--checkpoint", ev_checkpoint)->required();
  ev->add_option("--out", ev_out, "metrics json path");
  ev->add_option("--scores", ev_scores, "optional per-frame score csv");
  ev->add_option("--frames", ev_frames, "fixed evaluation frame count, 0 = full clips");
  ev->add_flag("--noise", ev_noise, "corrupt evaluation audio with another clip's track");
  ev->add_option("--noise-snr", ev_noise_snr, "corruption SNR in dB");
  ev->add_option("--noise-seed", ev_noise_seed);
  ev->add_option("--workers", ev_workers);

  // infer
  auto* in = app.add_subcommand("infer", "score one clip (frames tensor + wav)");
  std::string in_checkpoint, in_frames, in_audio, in_out = "scores.csv";
  double in_fps = 25.0;
  in->add_option("--checkpoint", in_checkpoint)->required();
  in->add_option("--frames", in_frames, "TNSR1 [T,1,112,112]")->required();
  in->add_option("--audio", in_audio, "mono 16 kHz wav")->required();
  in->add_option("--out", in_out);
  in->add_option("--fps", in_fps);

  // grad-check
  auto* gc = app.add_subcommand("grad-check", "finite-difference verification of all ops");
  int gc_seeds = 10;
  gc->add_option("--seeds", gc_seeds, "random draws per op");

  // rf-report
  auto* rf = app.add_subcommand("rf-report", "analytic temporal receptive fields");
  std::string rf_scale = "paper";
  rf->add_option("--scale", rf_scale, "paper|desk");

  // ablate
  auto* ab = app.add_subcommand("ablate", "train+eval comparison along one axis");
  std::string ab_train, ab_eval, ab_out;
  std::string ab_drop = "none", ab_frames = "variable", ab_aug = "none", ab_seeds = "1,2,3";
  bool ab_noise = false;
  double ab_noise_snr = 5.0, ab_budget = 90.0;
  int ab_epochs = 6, ab_batch = 8, ab_workers = 2;
  float ab_lr = 1e-3f;
  ab->add_option("--train-manifest", ab_train)->required();
  ab->add_option("--eval-manifest", ab_eval)->required();
  ab->add_option("--out", ab_out)->required();
  ab->add_option("--drop", ab_drop, "comma list: none|cross|self|both");
  ab->add_option("--frames", ab_frames, "comma list of N or variable");
  ab->add_option("--aug", ab_aug, "comma list: neg|noise|none");
  ab->add_flag("--eval-noise", ab_noise, "evaluate on noise-corrupted audio");
  ab->add_option("--eval-noise-snr", ab_noise_snr);
  ab->add_option("--seeds", ab_seeds, "comma list of training seeds");
  ab->add_option("--epochs", ab_epochs);
  ab->add_option("--batch", ab_batch);
  ab->add_option("--lr", ab_lr);
  ab->add_option("--workers", ab_workers);
  ab->add_option("--budget-min", ab_budget, "informational time budget");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return cmd_gen_data(gen_n, gen_mix, gen_duration, gen_out, gen_seed, gen_virtual,
                          gen_face_width, gen_fps, gen_sr);
    }
    if (tr->parsed()) {
      TrainConfig cfg = make_train_config(tr_lr, tr_decay, tr_epochs, tr_batch, tr_seed, tr_frames,
                                          tr_aug, tr_noise_dir, tr_visual_aug, tr_workers,
                                          tr_target);
      return cmd_train(tr_train, tr_val, tr_out, tr_scale, tr_drop, tr_model_seed, cfg);
    }
    if (ev->parsed()) {
      return cmd_eval(ev_manifest, ev_checkpoint, ev_out, ev_scores, ev_frames, ev_noise_snr,
                      ev_noise, ev_noise_seed, ev_workers);
    }
    if (in->parsed()) return cmd_infer(in_checkpoint, in_frames, in_audio, in_out, in_fps);
    if (gc->parsed()) return cmd_grad_check(gc_seeds);
    if (rf->parsed()) return cmd_rf_report(rf_scale);
    if (ab->parsed()) {
      return cmd_ablate(ab_train, ab_eval, ab_out, ab_drop, ab_frames, ab_aug, ab_noise,
                        ab_noise_snr, ab_seeds, ab_epochs, ab_batch, ab_lr, ab_workers, ab_budget);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 1;
}
