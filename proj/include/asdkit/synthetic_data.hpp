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

#include <map>
#include <string>
#include <vector>

#include "asdkit/audio_features.hpp"
#include "asdkit/visual_encoder.hpp"

namespace asdkit {

// The five dataset conditions over {audio active, lips moving, a/v sync}:
//   1 active+moving+sync -> speaking; 2 active+moving+out-of-sync;
//   3 active+static; 4 silent+moving; 5 silent+static (all non-speaking).
inline constexpr int kNumConditions = 5;

// Mouth-openness trajectory in [0,1]; the latent driver of both the lip
// rectangle and (condition 1) the audio envelope.
struct LatentOpenness {
  std::vector<float> o;
};

// Low-pass filtered uniform noise rescaled to [0,1]; lag-1 autocorrelation
// above 0.8 at T=100. Deterministic per seed.
LatentOpenness sample_openness(int t, std::uint64_t seed);

struct ClipMeta {
  int face_width_px = 76;
  int n_faces_in_scene = 1;
};

struct FaceTrackClip {
  std::string clip_id;
  FaceFrameSequence faces;
  Waveform audio;
  std::vector<int> labels;  // one per video frame
  int condition = 1;
  ClipMeta meta;
  // normalized face bounding box, constant over the track
  float x1 = 0, y1 = 0, x2 = 0, y2 = 0;
};

struct RenderOptions {
  int face_width_px = 76;
  int n_faces_in_scene = 1;
  float brightness_jitter = 0.08f;
  int envelope_lag_frames = 0;  // condition-1 audio lag behind the lips
};

FaceTrackClip render_clip(int condition, int t, float fps, int sample_rate, std::uint64_t seed,
                          const RenderOptions& opts = {});

// ---- datasets ----------------------------------------------------------------

struct DatasetSpec {
  int n_clips = 0;
  std::map<int, double> condition_mix;  // proportions summing to 1
  double duration_lo_s = 1.0;
  double duration_hi_s = 6.0;
  float fps = 25.0f;
  int sample_rate = 16000;
  std::uint64_t seed = 0;
  int face_width_lo = 64;
  int face_width_hi = 96;
  // Virtual datasets record only the generation recipe; clips are re-rendered
  // on demand instead of written to disk.
  bool materialize = true;
};

struct ManifestEntry {
  std::string clip_id;
  int condition = 1;
  int t = 0;
  float fps = 25.0f;
  int sample_rate = 16000;
  std::uint64_t seed = 0;
  RenderOptions render;
  int label = 0;  // per-frame label, constant within a clip
  std::string frames_path;  // empty for virtual clips
  std::string audio_path;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;
  std::string root_dir;
};

// Writes clips (frames as TNSR1, audio as WAV, unless virtual), an AVA-style
// annotation CSV, and manifest.json under out_dir; returns the manifest path.
std::string build_dataset(const DatasetSpec& spec, const std::string& out_dir);

Manifest load_manifest(const std::string& path);

// Reads a materialized clip from disk or re-renders a virtual one.
FaceTrackClip load_clip(const ManifestEntry& entry);

}  // namespace asdkit
