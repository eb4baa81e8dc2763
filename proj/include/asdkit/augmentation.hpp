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

#include <string>

#include "asdkit/audio_features.hpp"
#include "asdkit/visual_encoder.hpp"

namespace asdkit {

struct VisualAugmentParams {
  float flip_prob = 0.5f;
  float rotate_deg_max = 15.0f;
  float crop_scale_min = 0.85f;
};

struct AugmentationPlan {
  bool neg_sampling = false;
  float snr_db_low = 0.0f;
  float snr_db_high = 15.0f;
  VisualAugmentParams visual;
  std::uint64_t seed = 0;
};

struct MixResult {
  Waveform out;
  float clipped_fraction = 0.0f;
  bool silent_noise = false;
};

// out = primary + g*noise with g = rms(primary) / (rms(noise) * 10^(snr/20)).
// The noise is looped or truncated to the primary length; the result is
// clipped to [-1,1] and the clipped fraction reported. Near-silent noise
// (rms < 1e-8) returns the primary untouched with a warning flag. The
// primary clip's labels are never touched by mixing.
MixResult negative_sample_mix(const Waveform& primary, const Waveform& noise, float snr_db);

// Samples one WAV from the directory and an SNR from [lo,hi], then mixes as
// above. Deterministic per seed; file order is sorted by name.
MixResult external_noise_mix(const Waveform& primary, const std::string& noise_dir, float snr_lo,
                             float snr_hi, std::uint64_t seed);

// One flip decision, one rotation angle, one crop window per clip, applied
// identically to all frames. Rotation is bilinear with zero fill; the crop
// is rescaled back to 112x112. Deterministic per (params, seed).
FaceFrameSequence visual_augment(const FaceFrameSequence& frames, const VisualAugmentParams& params,
                                 std::uint64_t seed);

// Room-impulse-response convolution; interface stub only.
Waveform rir_convolve(const Waveform& w, const Waveform& rir);

}  // namespace asdkit
