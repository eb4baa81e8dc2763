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
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "asdkit/augmentation.hpp"
#include "asdkit/evaluation.hpp"
#include "asdkit/model.hpp"
#include "asdkit/synthetic_data.hpp"

namespace asdkit {

enum class AudioAugKind { kNone, kNegativeSampling, kExternalNoise };

struct TrainConfig {
  float lr0 = 1e-4f;
  float lr_decay = 0.95f;  // per-epoch multiplier
  int epochs = 20;
  int batch_size = 8;
  std::uint64_t seed = 0;
  int fixed_frames = 0;  // 0 = variable-length clips
  int workers = 2;

  AudioAugKind audio_aug = AudioAugKind::kNone;
  std::string noise_dir;  // for kExternalNoise
  float snr_db_low = 0.0f;
  float snr_db_high = 15.0f;
  bool visual_aug = false;
  VisualAugmentParams visual_params;

  // stop once validation mAP reaches this (negative disables)
  double target_map = -1.0;
  bool verbose = false;  // per-epoch progress on stderr
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double val_map = 0.0;
  double lr = 0.0;
};

float lr_at_epoch(const TrainConfig& cfg, int epoch);

// Standard bias-corrected Adam over a ParamSet, moments kept by index.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const nn::ParamSet& ps, float beta1 = 0.9f, float beta2 = 0.999f,
                         float eps = 1e-8f);

  void step(nn::ParamSet& ps, float lr);
  std::int64_t steps_taken() const { return t_; }

  void save(const std::string& dir, const nn::ParamSet& ps) const;
  void load(const std::string& dir, const nn::ParamSet& ps);

 private:
  std::vector<Tensor> m_, v_;
  std::int64_t t_ = 0;
  float beta1_, beta2_, eps_;
};

struct TrainResult {
  std::vector<EpochLog> logs;
  double best_map = 0.0;
  int best_epoch = -1;
  std::string checkpoint_dir;
};

// Per-frame scores for every clip of a manifest (eval mode). corrupt_snr_db,
// when set, overlays another clip's audio at that SNR before scoring —
// the noisy-evaluation protocol of the augmentation comparison.
std::vector<ScoredFrame> score_manifest(Pipeline& model, const Manifest& manifest, int workers,
                                        int fixed_frames = 0,
                                        std::optional<float> corrupt_snr_db = std::nullopt,
                                        std::uint64_t corrupt_seed = 0);

// Full optimization loop: shuffled gradient-accumulation batches of whole
// clips, per-clip augmentation seeds, Adam with the per-epoch decayed rate,
// validation mAP per epoch, best checkpoint + JSONL metrics under out_dir.
// Fully deterministic for a fixed config, including across worker counts.
TrainResult train(Pipeline& model, const Manifest& train_manifest, const Manifest& val_manifest,
                  const TrainConfig& cfg, const std::string& out_dir);

// Saves/loads model params, optimizer moments and meta.json.
void save_checkpoint(Pipeline& model, const AdamOptimizer* opt, int epoch, const std::string& dir);
int load_checkpoint(Pipeline& model, AdamOptimizer* opt, const std::string& dir);

}  // namespace asdkit
