// Acceptance suite: one binary, one pass/fail line per criterion.
//
//   1 gradient correctness          5 loss closed forms
//   2 receptive-field fidelity      6 desk-scale learnability
//   3 audio/visual length lock      7 directional ablations
//   4 metric oracle equivalence     8 command determinism
//
// Run all criteria or a subset: asdkit_acceptance --cli <path> --criterion 1,4,5
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "asdkit/grad_suite.hpp"
#include "asdkit/trainer.hpp"

namespace fs = std::filesystem;
using namespace asdkit;
using Clock = std::chrono::steady_clock;

namespace {

struct Ctx {
  std::string cli;        // path to the command-line binary
  std::string work_dir;   // scratch directory
  int workers = 2;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string run_command(const std::string& cmd, int* exit_code) {
  const std::string out_path =
      (fs::temp_directory_path() / ("asdkit_cmd_" + std::to_string(::getpid()) + ".out")).string();
  const int rc = std::system((cmd + " > " + out_path + " 2>&1").c_str());
  if (exit_code != nullptr) *exit_code = rc;
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::remove(out_path.c_str());
  return ss.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Manifest make_virtual_dataset(const Ctx& ctx, const std::string& name, int n,
                              std::map<int, double> mix, double dur_lo, double dur_hi,
                              std::uint64_t seed) {
  DatasetSpec spec;
  spec.n_clips = n;
  spec.condition_mix = std::move(mix);
  spec.duration_lo_s = dur_lo;
  spec.duration_hi_s = dur_hi;
  spec.seed = seed;
  spec.materialize = false;
  return load_manifest(build_dataset(spec, (fs::path(ctx.work_dir) / name).string()));
}

// ---- criterion 1 -----------------------------------------------------------

bool criterion1(const Ctx&) {
  const auto t0 = Clock::now();
  const auto entries = run_grad_check_suite(10);
  bool ok = true;
  double worst = 0;
  std::string worst_name;
  for (const auto& e : entries) {
    if (e.max_rel_error >= 1e-2) {
      ok = false;
      std::printf("       grad check FAILED for %s: %.3e\n", e.name.c_str(), e.max_rel_error);
    }
    if (e.max_rel_error > worst) {
      worst = e.max_rel_error;
      worst_name = e.name;
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 60.0) ok = false;
  std::printf("  %d op families over 10 seeds, worst %.2e (%s), %.1f s\n",
              static_cast<int>(entries.size()), worst, worst_name.c_str(), secs);
  return ok;
}

// ---- criterion 2 -----------------------------------------------------------

// Empirical temporal support of an encoder output vs the analytic interval.
template <typename EncodeFn>
bool perturbation_support_matches(const std::vector<LayerSpec>& specs, int in_len, int probe,
                                  EncodeFn&& encode, const Tensor& base_out, double thresh) {
  IndexRange expect = affected_interval(specs, in_len, probe, probe);
  const Tensor pert_out = encode(probe);
  const int out_len = pert_out.shape[0];
  int lo = out_len, hi = -1;
  const int dim = pert_out.shape[1];
  for (int i = 0; i < out_len; ++i) {
    double diff = 0;
    for (int j = 0; j < dim; ++j) {
      diff += std::fabs(static_cast<double>(pert_out.at(i, j)) - base_out.at(i, j));
    }
    if (diff > thresh) {
      lo = std::min(lo, i);
      hi = std::max(hi, i);
    }
  }
  return lo == expect.lo && hi == expect.hi;
}

bool criterion2(const Ctx& ctx) {
  bool ok = true;

  int rc = 0;
  const std::string out = run_command(ctx.cli + " rf-report --scale paper", &rc);
  const bool visual_ok = out.find("21 frames (840 ms") != std::string::npos;
  const bool audio_ok = out.find("189 MFCC frames (1890 ms") != std::string::npos;
  ok = ok && rc == 0 && visual_ok && audio_ok;
  std::printf("  rf-report --scale paper: visual 21/840 %s, audio 189/1890 %s\n",
              visual_ok ? "printed" : "MISSING", audio_ok ? "printed" : "MISSING");

  // analytic == empirical support on the desk configs
  {
    Rng rng(42);
    VisualEncoderConfig cfg = VisualEncoderConfig::desk();
    VisualEncoder enc(cfg, rng);
    const int t = 64, probe = 31;
    Rng data_rng(7);
    FaceFrameSequence base;
    base.fps = 25;
    base.frames = Tensor::uniform({t, 1, kFaceSize, kFaceSize}, 0, 1, data_rng);
    ag::Graph g0;
    const Tensor base_out = g0.val(enc.encode(g0, base, false));
    const bool match = perturbation_support_matches(
        cfg.temporal_layer_specs(), t, probe,
        [&](int p) {
          FaceFrameSequence pert = base;
          for (int i = 0; i < kFaceSize * kFaceSize; ++i) {
            pert.frames.data[static_cast<std::size_t>(p) * kFaceSize * kFaceSize + i] += 0.5f;
          }
          ag::Graph g;
          return g.val(enc.encode(g, pert, false));
        },
        base_out, 1e-6);
    ok = ok && match;
    std::printf("  desk visual empirical support == analytic interval: %s\n", match ? "yes" : "NO");
  }
  {
    Rng rng(43);
    AudioEncoderConfig cfg = AudioEncoderConfig::desk();
    cfg.use_se = false;  // conv-path support; the SE gate is a global channel stat
    AudioEncoder enc(cfg, rng);
    const int na = 160, probe = 80;
    Rng data_rng(8);
    MfccSequence base;
    base.frames = Tensor::uniform({na, kMfccDim}, -2, 2, data_rng);
    ag::Graph g0;
    const Tensor base_out = g0.val(enc.encode(g0, base, false));
    const bool match = perturbation_support_matches(
        cfg.temporal_layer_specs(), na, probe,
        [&](int p) {
          MfccSequence pert = base;
          for (int j = 0; j < kMfccDim; ++j) pert.frames.at(p, j) += 1.0f;
          ag::Graph g;
          return g.val(enc.encode(g, pert, false));
        },
        base_out, 1e-6);
    ok = ok && match;
    std::printf("  desk audio empirical support == analytic interval: %s\n", match ? "yes" : "NO");
  }
  return ok;
}

// ---- criterion 3 -----------------------------------------------------------

bool criterion3(const Ctx& ctx) {
  const auto t0 = Clock::now();
  Rng rng(99);
  VisualEncoder venc(VisualEncoderConfig::desk(), rng);
  AudioEncoder aenc(AudioEncoderConfig::desk(), rng);

  std::vector<int> failures(50, 0);
  std::vector<std::thread> threads;
  const int workers = std::max(1, ctx.workers);
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (int k = w; k < 50; ++k) {
        if (k % workers != w % workers) continue;
        const double dur = 1.0 + 9.0 * k / 49.0;
        const int t = static_cast<int>(std::lround(dur * 25.0));
        FaceTrackClip clip = render_clip(1 + k % 2, t, 25, 16000, 5000 + static_cast<std::uint64_t>(k));
        const Waveform aligned = align_lengths(clip.audio, 25, t);
        const MfccSequence mfcc = extract_mfcc(aligned, t);
        ag::Graph g;
        const Tensor& fv = g.val(venc.encode(g, clip.faces, false));
        const Tensor& fa = g.val(aenc.encode(g, mfcc, false));
        const bool good = mfcc.count() == 4 * t && fv.shape[0] == t && fa.shape[0] == t &&
                          fv.shape[1] == kEmbedDim && fa.shape[1] == kEmbedDim;
        failures[static_cast<std::size_t>(k)] = good ? 0 : 1;
      }
    });
  }
  for (auto& th : threads) th.join();
  int bad = 0;
  for (int f : failures) bad += f;
  const double secs = seconds_since(t0);
  std::printf("  50 durations in [1,10] s: %d violations, %.1f s\n", bad, secs);
  return bad == 0 && secs < 120.0;
}

// ---- criterion 4 -----------------------------------------------------------

double brute_force_ap(std::vector<ScoredFrame> frames) {
  std::stable_sort(frames.begin(), frames.end(), [](const ScoredFrame& a, const ScoredFrame& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.clip_id != b.clip_id) return a.clip_id < b.clip_id;
    return a.frame_index < b.frame_index;
  });
  std::int64_t positives = 0;
  for (const auto& f : frames) positives += f.label;
  double ap = 0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (frames[k].label != 1) continue;
    std::int64_t tp = 0;
    for (std::size_t i = 0; i <= k; ++i) tp += frames[i].label;
    ap += static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  return ap / static_cast<double>(positives);
}

bool criterion4(const Ctx&) {
  const auto t0 = Clock::now();
  bool ok = true;

  Rng rng(123);
  std::vector<ScoredFrame> eight(8);
  for (int i = 0; i < 8; ++i) {
    eight[static_cast<std::size_t>(i)].clip_id = "c";
    eight[static_cast<std::size_t>(i)].frame_index = i;
    eight[static_cast<std::size_t>(i)].score = rng.uniform();
  }
  int mismatches = 0;
  for (int mask = 1; mask < 256; ++mask) {
    for (int b = 0; b < 8; ++b) eight[static_cast<std::size_t>(b)].label = (mask >> b) & 1;
    if (average_precision(eight) != brute_force_ap(eight)) ++mismatches;
  }
  ok = ok && mismatches == 0;
  std::printf("  exhaustive 2^8 labelings: %d mismatches vs brute force\n", mismatches);

  std::vector<ScoredFrame> worked(3);
  const float scores[3] = {0.9f, 0.8f, 0.7f};
  const int labels[3] = {1, 0, 1};
  for (int i = 0; i < 3; ++i) {
    worked[static_cast<std::size_t>(i)] = {"c", i, scores[i], labels[i], 0, 0};
  }
  const double ap = average_precision(worked);
  const bool worked_ok = std::fabs(ap - 5.0 / 6.0) < 1e-9;
  ok = ok && worked_ok;
  std::printf("  worked example AP = %.10f (expected 0.8333...): %s\n", ap, worked_ok ? "ok" : "NO");

  int f1_mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<ScoredFrame> frames(20);
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (int i = 0; i < 20; ++i) {
      ScoredFrame& f = frames[static_cast<std::size_t>(i)];
      f.clip_id = "c";
      f.frame_index = i;
      f.score = rng.uniform();
      f.label = rng.uniform() < 0.5f ? 1 : 0;
      const bool pred = f.score >= 0.5f;
      tp += pred && f.label == 1;
      fp += pred && f.label == 0;
      fn += !pred && f.label == 1;
    }
    const double expect = (2 * tp + fp + fn) == 0
                              ? 0.0
                              : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    if (f1_score(frames) != expect) ++f1_mismatches;
  }
  ok = ok && f1_mismatches == 0;
  const double secs = seconds_since(t0);
  std::printf("  1000 random F1 cases: %d mismatches vs confusion oracle, %.1f s\n", f1_mismatches,
              secs);
  return ok && secs < 60.0;
}

// ---- criterion 5 -----------------------------------------------------------

bool criterion5(const Ctx&) {
  bool ok = true;
  const double ln2 = frame_cross_entropy({0.5f, 0.5f, 0.5f}, {1, 0, 1});
  const bool ln2_ok = std::fabs(ln2 - std::log(2.0)) < 1e-6;
  ok = ok && ln2_ok;
  std::printf("  s=0.5 loss = %.8f vs ln 2 = %.8f: %s\n", ln2, std::log(2.0), ln2_ok ? "ok" : "NO");

  const double worked = frame_cross_entropy({0.9f, 0.2f}, {1, 0});
  const double expect = -(std::log(0.9) + std::log(0.8)) / 2.0;
  const bool worked_ok = std::fabs(worked - expect) < 1e-6 && std::fabs(worked - 0.1643) < 1e-4;
  ok = ok && worked_ok;
  std::printf("  worked case loss = %.8f vs %.8f (~0.1643): %s\n", worked, expect,
              worked_ok ? "ok" : "NO");

  const double perfect = frame_cross_entropy({1.0f, 0.0f}, {1, 0});
  const bool perfect_ok = perfect <= 1e-6 * std::fabs(std::log(1e-7)) + 1e-12;
  ok = ok && perfect_ok;
  std::printf("  perfect prediction loss = %.3e (clamp floor): %s\n", perfect,
              perfect_ok ? "ok" : "NO");
  return ok;
}

// ---- criterion 6 -----------------------------------------------------------

bool criterion6(const Ctx& ctx) {
  const auto t0 = Clock::now();
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  const double budget_s = 1200.0 * 4.0 / std::min(4u, cores);

  Manifest train_m =
      make_virtual_dataset(ctx, "learn_train", 2000, {{1, 0.5}, {2, 0.5}}, 1.0, 1.0, 101);
  Manifest val_m = make_virtual_dataset(ctx, "learn_val", 400, {{1, 0.5}, {2, 0.5}}, 1.0, 1.0, 202);

  Pipeline model(PipelineConfig::desk(11));
  TrainConfig cfg;
  cfg.lr0 = 1e-3f;
  cfg.epochs = 20;
  cfg.batch_size = 8;
  cfg.seed = 11;
  cfg.workers = ctx.workers;
  cfg.target_map = 0.90;
  cfg.verbose = true;
  TrainResult res = train(model, train_m, val_m, cfg, (fs::path(ctx.work_dir) / "learn_run").string());

  const double secs = seconds_since(t0);
  const bool map_ok = res.best_map >= 0.90;
  const bool time_ok = secs <= budget_s;
  std::printf("  best val mAP %.4f at epoch %d (threshold 0.90): %s\n", res.best_map,
              res.best_epoch, map_ok ? "ok" : "NO");
  std::printf("  wall %.0f s on %u cores (budget %.0f s, 20 min at 4 cores): %s\n", secs, cores,
              budget_s, time_ok ? "ok" : "NO");
  return map_ok && time_ok;
}

// ---- criterion 7 -----------------------------------------------------------

double mean_map_over_seeds(const Ctx& ctx, const Manifest& train_m, const Manifest& eval_m,
                           bool drop_cross, bool drop_self, int fixed_frames, AudioAugKind aug,
                           std::optional<float> eval_noise_snr, int epochs, float lr,
                           const std::vector<std::uint64_t>& seeds, const char* tag) {
  double mean = 0;
  for (std::uint64_t seed : seeds) {
    PipelineConfig mc = PipelineConfig::desk(seed + 1);
    mc.fusion.drop_cross = drop_cross;
    mc.fusion.drop_self = drop_self;
    Pipeline model(mc);
    TrainConfig cfg;
    cfg.lr0 = lr;
    cfg.epochs = epochs;
    cfg.batch_size = 8;
    cfg.seed = seed;
    cfg.workers = ctx.workers;
    cfg.fixed_frames = fixed_frames;
    cfg.audio_aug = aug;
    const std::string run_dir =
        (fs::path(ctx.work_dir) / (std::string("ablate_") + tag + "_" + std::to_string(seed)))
            .string();
    train(model, train_m, Manifest{}, cfg, run_dir);
    const auto scored =
        score_manifest(model, eval_m, ctx.workers, fixed_frames, eval_noise_snr, seed + 99);
    const double map = average_precision(scored);
    std::printf("    %s seed %llu: mAP %.4f\n", tag, static_cast<unsigned long long>(seed), map);
    mean += map;
  }
  return mean / static_cast<double>(seeds.size());
}

bool criterion7(const Ctx& ctx) {
  const auto t0 = Clock::now();
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  bool ok = true;

  // (a) attention ablation ordering: full >= w/o cross >= w/o both
  {
    Manifest train_m =
        make_virtual_dataset(ctx, "abl_train", 600, {{1, 0.5}, {2, 0.5}}, 1.0, 1.0, 301);
    Manifest eval_m =
        make_virtual_dataset(ctx, "abl_eval", 200, {{1, 0.5}, {2, 0.5}}, 1.0, 1.0, 302);
    const double full = mean_map_over_seeds(ctx, train_m, eval_m, false, false, 0,
                                            AudioAugKind::kNone, std::nullopt, 5, 1e-3f, seeds,
                                            "full");
    const double no_cross = mean_map_over_seeds(ctx, train_m, eval_m, true, false, 0,
                                                AudioAugKind::kNone, std::nullopt, 5, 1e-3f, seeds,
                                                "no_cross");
    const double no_both = mean_map_over_seeds(ctx, train_m, eval_m, true, true, 0,
                                               AudioAugKind::kNone, std::nullopt, 5, 1e-3f, seeds,
                                               "no_both");
    const bool order = full >= no_cross && no_cross >= no_both;
    ok = ok && order;
    std::printf("  (a) full %.4f >= w/o cross %.4f >= w/o both %.4f: %s\n", full, no_cross, no_both,
                order ? "ok" : "NO");
  }

  // (b) frame-count ordering: 50-frame training beats 5-frame training
  {
    Manifest train_m =
        make_virtual_dataset(ctx, "frames_train", 400, {{1, 0.5}, {2, 0.5}}, 2.0, 2.0, 401);
    Manifest eval_m =
        make_virtual_dataset(ctx, "frames_eval", 150, {{1, 0.5}, {2, 0.5}}, 2.0, 2.0, 402);
    const double f50 = mean_map_over_seeds(ctx, train_m, eval_m, false, false, 50,
                                           AudioAugKind::kNone, std::nullopt, 5, 1e-3f, seeds,
                                           "frames50");
    const double f5 = mean_map_over_seeds(ctx, train_m, eval_m, false, false, 5,
                                          AudioAugKind::kNone, std::nullopt, 5, 1e-3f, seeds,
                                          "frames5");
    const bool order = f50 > f5;
    ok = ok && order;
    std::printf("  (b) frames=50 mAP %.4f > frames=5 mAP %.4f: %s\n", f50, f5, order ? "ok" : "NO");
  }

  // (c) negative sampling >= no augmentation under noisy evaluation
  {
    Manifest train_m =
        make_virtual_dataset(ctx, "aug_train", 600, {{1, 0.5}, {2, 0.5}}, 1.0, 1.0, 501);
    Manifest eval_m =
        make_virtual_dataset(ctx, "aug_eval", 200, {{1, 0.5}, {2, 0.5}}, 1.0, 1.0, 502);
    const float noisy_snr = 2.0f;
    const double with_neg = mean_map_over_seeds(ctx, train_m, eval_m, false, false, 0,
                                                AudioAugKind::kNegativeSampling, noisy_snr, 5,
                                                1e-3f, seeds, "neg");
    const double without = mean_map_over_seeds(ctx, train_m, eval_m, false, false, 0,
                                               AudioAugKind::kNone, noisy_snr, 5, 1e-3f, seeds,
                                               "no_aug");
    const bool order = with_neg >= without;
    ok = ok && order;
    std::printf("  (c) neg-sampling %.4f >= no-aug %.4f on noisy eval: %s\n", with_neg, without,
                order ? "ok" : "NO");
  }

  const double secs = seconds_since(t0);
  const bool time_ok = secs <= 5400.0;
  std::printf("  combined ablation wall time %.0f s (budget 5400 s): %s\n", secs,
              time_ok ? "ok" : "NO");
  return ok && time_ok;
}

// ---- criterion 8 -----------------------------------------------------------

bool criterion8(const Ctx& ctx) {
  bool ok = true;
  const fs::path base = fs::path(ctx.work_dir) / "determinism";
  fs::create_directories(base);

  // gen-data: identical manifests for the same seed
  int rc1 = 0, rc2 = 0;
  run_command(ctx.cli + " gen-data --n 20 --mix 1:0.5,2:0.5 --duration 1 --out " +
                  (base / "d1").string() + " --seed 9 --virtual",
              &rc1);
  run_command(ctx.cli + " gen-data --n 20 --mix 1:0.5,2:0.5 --duration 1 --out " +
                  (base / "d2").string() + " --seed 9 --virtual",
              &rc2);
  const bool gen_ok = rc1 == 0 && rc2 == 0 &&
                      slurp((base / "d1" / "manifest.json").string()) ==
                          slurp((base / "d2" / "manifest.json").string());
  ok = ok && gen_ok;
  std::printf("  gen-data rerun manifest bytes identical: %s\n", gen_ok ? "yes" : "NO");

  // train + eval: identical metrics for the same seed
  auto train_eval = [&](const std::string& tag) {
    const std::string run = (base / ("run_" + tag)).string();
    int rc = 0;
    run_command(ctx.cli + " train --train-manifest " + (base / "d1" / "manifest.json").string() +
                    " --val-manifest " + (base / "d2" / "manifest.json").string() + " --out " + run +
                    " --epochs 2 --batch 4 --lr 5e-4 --seed 3 --workers " +
                    std::to_string(ctx.workers),
                &rc);
    if (rc != 0) return std::pair<std::string, std::string>{"train failed", tag};
    int rc_eval = 0;
    run_command(ctx.cli + " eval --manifest " + (base / "d2" / "manifest.json").string() +
                    " --checkpoint " + run + "/best --out " + run + "/metrics.json --workers " +
                    std::to_string(ctx.workers),
                &rc_eval);
    if (rc_eval != 0) return std::pair<std::string, std::string>{"eval failed", tag};
    return std::pair<std::string, std::string>{slurp(run + "/metrics.jsonl"),
                                               slurp(run + "/metrics.json")};
  };
  const auto [log_a, metrics_a] = train_eval("a");
  const auto [log_b, metrics_b] = train_eval("b");
  const bool train_ok = !log_a.empty() && log_a == log_b && !metrics_a.empty() &&
                        metrics_a == metrics_b && log_a != "train failed";
  ok = ok && train_ok;
  std::printf("  train+eval rerun metrics bytes identical: %s\n", train_ok ? "yes" : "NO");
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  Ctx ctx;
  ctx.cli = "build/tools/asdkit";
  ctx.work_dir = (fs::temp_directory_path() / "asdkit_acceptance").string();
  std::string which = "1,2,3,4,5,6,7,8";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) ctx.cli = argv[++i];
    else if (arg == "--criterion" && i + 1 < argc) which = argv[++i];
    else if (arg == "--work-dir" && i + 1 < argc) ctx.work_dir = argv[++i];
    else if (arg == "--workers" && i + 1 < argc) ctx.workers = std::atoi(argv[++i]);
    else {
      std::fprintf(stderr, "usage: %s [--cli path] [--criterion 1,2,...] [--workers n]\n", argv[0]);
      return 2;
    }
  }
  fs::create_directories(ctx.work_dir);

  struct Entry {
    int id;
    const char* name;
    bool (*fn)(const Ctx&);
  };
  const Entry entries[] = {
      {1, "gradient correctness", criterion1},
      {2, "receptive-field fidelity", criterion2},
      {3, "audio/visual alignment", criterion3},
      {4, "metric oracle equivalence", criterion4},
      {5, "loss closed forms", criterion5},
      {6, "desk-scale learnability", criterion6},
      {7, "directional ablations", criterion7},
      {8, "command determinism", criterion8},
  };

  bool all_ok = true;
  for (const Entry& e : entries) {
    if (which.find(std::to_string(e.id)) == std::string::npos) continue;
    std::printf("criterion %d: %s\n", e.id, e.name);
    bool ok = false;
    try {
      ok = e.fn(ctx);
    } catch (const std::exception& ex) {
      std::printf("  exception: %s\n", ex.what());
    }
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", e.id, e.name);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
