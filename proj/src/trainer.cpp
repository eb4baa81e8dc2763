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
#include "asdkit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <cstdio>
#include <fstream>
#include <thread>
#include <unordered_map>

#include "json.hpp"

namespace asdkit {

using namespace nn;

float lr_at_epoch(const TrainConfig& cfg, int epoch) {
  check_arg(cfg.lr0 > 0 && cfg.lr_decay > 0 && cfg.lr_decay <= 1, "lr schedule: bad config");
  check_arg(epoch >= 0, "lr schedule: epoch must be >= 0");
  return cfg.lr0 * std::pow(cfg.lr_decay, static_cast<float>(epoch));
}

AdamOptimizer::AdamOptimizer(const ParamSet& ps, float beta1, float beta2, float eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const Parameter* p : ps.params) {
    m_.push_back(Tensor::zeros(p->value.shape));
    v_.push_back(Tensor::zeros(p->value.shape));
  }
}

void AdamOptimizer::step(ParamSet& ps, float lr) {
  check_arg(ps.params.size() == m_.size(), "adam: parameter set changed size");
  ++t_;
  const float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
  const float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
  for (std::size_t i = 0; i < ps.params.size(); ++i) {
    Parameter& p = *ps.params[i];
    check_arg(p.grad.shape == p.value.shape, "adam: missing gradient for " + p.name);
    real* m = m_[i].ptr();
    real* v = v_[i].ptr();
    real* w = p.value.ptr();
    const real* g = p.grad.ptr();
    const std::size_t n = p.value.data.size();
    for (std::size_t k = 0; k < n; ++k) {
      m[k] = beta1_ * m[k] + (1.0f - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0f - beta2_) * g[k] * g[k];
      const float mhat = m[k] / bc1;
      const float vhat = v[k] / bc2;
      w[k] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void AdamOptimizer::save(const std::string& dir, const ParamSet& ps) const {
  for (std::size_t i = 0; i < ps.params.size(); ++i) {
    std::string base = ps.params[i]->name;
    for (char& c : base) {
      if (c == '/') c = '.';
    }
    save_tnsr(m_[i], (std::filesystem::path(dir) / (base + ".adam_m.tnsr")).string());
    save_tnsr(v_[i], (std::filesystem::path(dir) / (base + ".adam_v.tnsr")).string());
  }
}

void AdamOptimizer::load(const std::string& dir, const ParamSet& ps) {
  for (std::size_t i = 0; i < ps.params.size(); ++i) {
    std::string base = ps.params[i]->name;
    for (char& c : base) {
      if (c == '/') c = '.';
    }
    m_[i] = load_tnsr((std::filesystem::path(dir) / (base + ".adam_m.tnsr")).string());
    v_[i] = load_tnsr((std::filesystem::path(dir) / (base + ".adam_v.tnsr")).string());
  }
}

namespace {

struct PreparedClip {
  FaceFrameSequence faces;
  MfccSequence mfcc;
  std::vector<int> labels;
  std::vector<int> mask;  // empty = all frames real
  int frame_offset = 0;   // original index of the first kept frame
};

// Crops or zero-pads a loaded clip to a fixed frame count; applies visual
// and audio augmentation with seeds derived from `aug_seed`.
PreparedClip prepare_clip(const FaceTrackClip& clip, const Waveform* mix_audio,
                          const TrainConfig& cfg, std::uint64_t aug_seed, bool training) {
  PreparedClip out;
  const int t_full = clip.faces.length();
  const float fps = clip.faces.fps;

  int start = 0;
  int t_eff = t_full;
  if (cfg.fixed_frames > 0) {
    t_eff = cfg.fixed_frames;
    if (t_full > t_eff) {
      if (training) {
        Rng rng(Rng::derive(aug_seed, 3));
        start = static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(t_full - t_eff + 1)));
      } else {
        start = (t_full - t_eff) / 2;
      }
    }
  }
  out.frame_offset = start;
  const int copy_frames = std::min(t_eff, t_full - start);

  // frames
  const std::size_t fsz = static_cast<std::size_t>(kFaceSize) * kFaceSize;
  out.faces.fps = fps;
  if (start == 0 && t_eff == t_full) {
    out.faces.frames = clip.faces.frames;
  } else {
    out.faces.frames = Tensor::zeros({t_eff, 1, kFaceSize, kFaceSize});
    std::copy_n(clip.faces.frames.data.begin() + static_cast<std::ptrdiff_t>(start * fsz),
                static_cast<std::ptrdiff_t>(copy_frames * fsz), out.faces.frames.data.begin());
  }

  // labels and (if padded) the loss mask
  out.labels.assign(static_cast<std::size_t>(t_eff), 0);
  for (int i = 0; i < copy_frames; ++i) {
    out.labels[static_cast<std::size_t>(i)] = clip.labels[static_cast<std::size_t>(start + i)];
  }
  if (copy_frames < t_eff) {
    out.mask.assign(static_cast<std::size_t>(t_eff), 0);
    for (int i = 0; i < copy_frames; ++i) out.mask[static_cast<std::size_t>(i)] = 1;
  }

  // audio window matching the kept frames
  Waveform audio;
  audio.sample_rate = clip.audio.sample_rate;
  const auto s0 = static_cast<std::size_t>(std::llround(start / fps * clip.audio.sample_rate));
  const auto s1 = std::min(clip.audio.samples.size(),
                           s0 + static_cast<std::size_t>(std::llround(
                                    static_cast<double>(t_eff) / fps * clip.audio.sample_rate)));
  if (s0 < clip.audio.samples.size()) {
    audio.samples.assign(clip.audio.samples.begin() + static_cast<std::ptrdiff_t>(s0),
                         clip.audio.samples.begin() + static_cast<std::ptrdiff_t>(s1));
  }
  audio = align_lengths(audio, fps, t_eff);

  if (training && cfg.visual_aug) {
    out.faces = visual_augment(out.faces, cfg.visual_params, Rng::derive(aug_seed, 1));
  }
  if (mix_audio != nullptr) {
    Rng rng(Rng::derive(aug_seed, 2));
    const float snr = rng.uniform(cfg.snr_db_low, cfg.snr_db_high);
    audio = negative_sample_mix(audio, *mix_audio, snr).out;
  } else if (training && cfg.audio_aug == AudioAugKind::kExternalNoise) {
    audio = external_noise_mix(audio, cfg.noise_dir, cfg.snr_db_low, cfg.snr_db_high,
                               Rng::derive(aug_seed, 2))
                .out;
  }
  out.mfcc = extract_mfcc(audio, t_eff);
  return out;
}

// Launches fn(i) for i in [0,n) across `workers` threads, striped so slot
// ownership is unique. Rethrows the first worker exception.
void parallel_indices(int n, int workers, const std::function<void(int)>& fn) {
  const int w = std::max(1, std::min(workers, n));
  if (w == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(w));
  for (int wi = 0; wi < w; ++wi) {
    threads.emplace_back([&, wi] {
      try {
        for (int i = wi; i < n; i += w) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(wi)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::vector<ScoredFrame> score_manifest(Pipeline& model, const Manifest& manifest, int workers,
                                        int fixed_frames, std::optional<float> corrupt_snr_db,
                                        std::uint64_t corrupt_seed) {
  const int n = static_cast<int>(manifest.entries.size());
  std::vector<std::vector<ScoredFrame>> slots(static_cast<std::size_t>(n));
  TrainConfig eval_cfg;
  eval_cfg.fixed_frames = fixed_frames;

  parallel_indices(n, workers, [&](int i) {
    const ManifestEntry& entry = manifest.entries[static_cast<std::size_t>(i)];
    FaceTrackClip clip = load_clip(entry);
    Waveform partner;
    const Waveform* mix = nullptr;
    if (corrupt_snr_db.has_value() && n > 1) {
      const ManifestEntry& other = manifest.entries[static_cast<std::size_t>((i + 1) % n)];
      partner = load_clip(other).audio;
      mix = &partner;
    }
    TrainConfig cfg = eval_cfg;
    cfg.snr_db_low = cfg.snr_db_high = corrupt_snr_db.value_or(0.0f);
    PreparedClip pc = prepare_clip(clip, mix, cfg,
                                   Rng::derive(corrupt_seed, static_cast<std::uint64_t>(i)), false);

    ag::Graph g;
    ag::Var probs = model.forward_probs(g, pc.faces, pc.mfcc, false);
    ag::Var s = Classifier::scores_from_probs(g, probs);
    const Tensor& sv = g.val(s);
    std::vector<ScoredFrame>& out = slots[static_cast<std::size_t>(i)];
    for (int f = 0; f < sv.shape[0]; ++f) {
      if (!pc.mask.empty() && pc.mask[static_cast<std::size_t>(f)] == 0) continue;
      ScoredFrame sf;
      sf.clip_id = entry.clip_id;
      sf.frame_index = pc.frame_offset + f;
      sf.score = sv.data[static_cast<std::size_t>(f)];
      sf.label = pc.labels[static_cast<std::size_t>(f)];
      sf.face_width_px = entry.render.face_width_px;
      sf.n_faces = entry.render.n_faces_in_scene;
      out.push_back(std::move(sf));
    }
  });

  std::vector<ScoredFrame> all;
  for (auto& slot : slots) {
    for (auto& f : slot) all.push_back(std::move(f));
  }
  return all;
}

void save_checkpoint(Pipeline& model, const AdamOptimizer* opt, int epoch, const std::string& dir) {
  std::filesystem::create_directories(dir);
  save_param_set(model.params(), dir);
  if (opt != nullptr) opt->save(dir, model.params());
  nlohmann::json meta;
  meta["epoch"] = epoch;
  meta["config_hash"] = model.config().hash();
  meta["config"] = nlohmann::json::parse(model.config().to_json());
  meta["adam_steps"] = opt != nullptr ? opt->steps_taken() : 0;
  std::ofstream out(std::filesystem::path(dir) / "meta.json");
  if (!out) throw IoError("save_checkpoint: cannot write meta.json");
  out << meta.dump(2) << '\n';
}

int load_checkpoint(Pipeline& model, AdamOptimizer* opt, const std::string& dir) {
  std::ifstream in(std::filesystem::path(dir) / "meta.json");
  if (!in) throw IoError("load_checkpoint: missing meta.json in " + dir);
  nlohmann::json meta = nlohmann::json::parse(in, nullptr, false);
  if (meta.is_discarded()) throw IoError("load_checkpoint: malformed meta.json");
  check_arg(meta.value("config_hash", 0ULL) == model.config().hash(),
            "load_checkpoint: checkpoint was written by a different model config");
  model.load(dir);
  if (opt != nullptr) opt->load(dir, model.params());
  return meta.value("epoch", 0);
}

TrainResult train(Pipeline& model, const Manifest& train_manifest, const Manifest& val_manifest,
                  const TrainConfig& cfg, const std::string& out_dir) {
  check_arg(!train_manifest.entries.empty(), "train: empty manifest");
  check_arg(cfg.batch_size >= 1 && cfg.epochs >= 1, "train: bad batch/epoch config");
  std::filesystem::create_directories(out_dir);
  std::ofstream log_stream(std::filesystem::path(out_dir) / "metrics.jsonl");
  if (!log_stream) throw IoError("train: cannot write metrics.jsonl");

  ParamSet& ps = model.params();
  AdamOptimizer opt(ps);
  std::unordered_map<const Parameter*, std::size_t> param_index;
  for (std::size_t i = 0; i < ps.params.size(); ++i) param_index[ps.params[i]] = i;

  const int n = static_cast<int>(train_manifest.entries.size());
  TrainResult result;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const float lr = lr_at_epoch(cfg, epoch);

    // seeded shuffle of clip order
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng shuffle_rng(Rng::derive(cfg.seed, 100003ULL + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(static_cast<std::uint32_t>(i))]);
    }

    double epoch_loss = 0;
    std::int64_t batches = 0;
    for (int base = 0; base < n; base += cfg.batch_size) {
      const int bs = std::min(cfg.batch_size, n - base);

      // preload whole clips serially (negative sampling needs partner audio)
      std::vector<FaceTrackClip> clips(static_cast<std::size_t>(bs));
      for (int j = 0; j < bs; ++j) {
        clips[static_cast<std::size_t>(j)] =
            load_clip(train_manifest.entries[static_cast<std::size_t>(order[static_cast<std::size_t>(base + j)])]);
      }

      std::vector<std::vector<std::pair<std::size_t, Tensor>>> slot_grads(static_cast<std::size_t>(bs));
      std::vector<std::vector<ag::Graph::PendingBnUpdate>> slot_bn(static_cast<std::size_t>(bs));
      std::vector<double> slot_loss(static_cast<std::size_t>(bs), 0.0);

      parallel_indices(bs, cfg.workers, [&](int j) {
        const int clip_pos = base + j;
        const std::uint64_t aug_seed =
            Rng::derive(cfg.seed, 7ULL + static_cast<std::uint64_t>(epoch) * 1000003ULL +
                                      static_cast<std::uint64_t>(clip_pos));
        const Waveform* mix = nullptr;
        if (cfg.audio_aug == AudioAugKind::kNegativeSampling && bs > 1) {
          mix = &clips[static_cast<std::size_t>((j + 1) % bs)].audio;
        }
        PreparedClip pc = prepare_clip(clips[static_cast<std::size_t>(j)], mix, cfg, aug_seed, true);

        ag::Graph g;
        ag::Var logits = model.forward_logits(g, pc.faces, pc.mfcc, true);
        ag::Var loss = Classifier::loss_from_logits(g, logits, pc.labels,
                                                    pc.mask.empty() ? nullptr : &pc.mask);
        g.backward(loss);
        slot_loss[static_cast<std::size_t>(j)] = g.val(loss).data[0];
        for (int id = 0; id < g.size(); ++id) {
          ag::Graph::Node& node = g.node(id);
          if (node.bound_param == nullptr || node.grad.data.empty()) continue;
          slot_grads[static_cast<std::size_t>(j)].emplace_back(param_index.at(node.bound_param),
                                                               std::move(node.grad));
        }
        slot_bn[static_cast<std::size_t>(j)] = std::move(g.pending_bn);
      });

      // deterministic reduction in slot order
      ps.zero_grads();
      for (int j = 0; j < bs; ++j) {
        for (auto& [idx, grad] : slot_grads[static_cast<std::size_t>(j)]) {
          Tensor& dst = ps.params[idx]->grad;
          for (std::size_t k = 0; k < grad.data.size(); ++k) dst.data[k] += grad.data[k];
        }
        epoch_loss += slot_loss[static_cast<std::size_t>(j)];
      }
      const real inv_bs = real(1) / static_cast<real>(bs);
      for (Parameter* p : ps.params) {
        for (auto& gv : p->grad.data) gv *= inv_bs;
      }
      for (int j = 0; j < bs; ++j) {
        ag::Graph scratch;
        scratch.pending_bn = std::move(slot_bn[static_cast<std::size_t>(j)]);
        scratch.apply_pending_bn();
      }
      opt.step(ps, lr);
      ++batches;
    }

    EpochLog log;
    log.epoch = epoch;
    log.loss = epoch_loss / static_cast<double>(n);
    log.lr = lr;
    if (!val_manifest.entries.empty()) {
      std::vector<ScoredFrame> scored =
          score_manifest(model, val_manifest, cfg.workers, cfg.fixed_frames);
      log.val_map = average_precision(scored);
    }
    result.logs.push_back(log);
    if (cfg.verbose) {
      std::fprintf(stderr, "epoch %d  loss %.4f  val_map %.4f  lr %.3e\n", log.epoch, log.loss,
                   log.val_map, log.lr);
    }
    log_stream << nlohmann::json{{"epoch", log.epoch},
                                 {"loss", log.loss},
                                 {"val_map", log.val_map},
                                 {"lr", log.lr}}
                      .dump()
               << '\n';
    log_stream.flush();

    if (log.val_map >= result.best_map || result.best_epoch < 0) {
      result.best_map = log.val_map;
      result.best_epoch = epoch;
      result.checkpoint_dir = (std::filesystem::path(out_dir) / "best").string();
      save_checkpoint(model, &opt, epoch, result.checkpoint_dir);
    }
    if (cfg.target_map > 0 && log.val_map >= cfg.target_map) break;
  }
  return result;
}

}  // namespace asdkit
