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
#include "asdkit/synthetic_data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace asdkit {

using nlohmann::json;

LatentOpenness sample_openness(int t, std::uint64_t seed) {
  check_arg(t >= 1, "sample_openness: need t >= 1");
  Rng rng(seed);
  const float alpha = 0.88f;
  float state = rng.uniform();
  for (int i = 0; i < 24; ++i) state = alpha * state + (1 - alpha) * rng.uniform();  // burn-in
  LatentOpenness lat;
  lat.o.resize(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) {
    state = alpha * state + (1 - alpha) * rng.uniform();
    lat.o[static_cast<std::size_t>(i)] = state;
  }
  float lo = lat.o[0], hi = lat.o[0];
  for (float v : lat.o) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi - lo < 1e-9f) {
    std::fill(lat.o.begin(), lat.o.end(), 0.5f);
  } else {
    for (float& v : lat.o) v = (v - lo) / (hi - lo);
  }
  return lat;
}

namespace {

// face geometry derived from the requested face width
struct FaceGeom {
  float cx = 56, cy = 58;
  float rx, ry;
  float eye_y, eye_dx, eye_rx, eye_ry;
  float mouth_y, mouth_half_w;
  int mouth_max_h;

  explicit FaceGeom(int face_width_px) {
    rx = face_width_px / 2.0f;
    ry = 1.25f * rx;
    eye_y = cy - 0.35f * ry;
    eye_dx = 0.42f * rx;
    eye_rx = 0.16f * rx;
    eye_ry = 0.09f * ry;
    mouth_y = cy + 0.45f * ry;
    mouth_half_w = 0.40f * rx;
    mouth_max_h = std::max(2, static_cast<int>(std::lround(0.30f * ry)));
  }
};

void draw_frame(real* img, const FaceGeom& geo, float openness, float brightness) {
  const float bg = 0.15f + brightness;
  const float skin = 0.72f + brightness;
  const float dark = 0.22f + brightness;
  const float mouth = 0.08f + brightness;
  for (int y = 0; y < kFaceSize; ++y) {
    for (int x = 0; x < kFaceSize; ++x) {
      const float nx = (static_cast<float>(x) - geo.cx) / geo.rx;
      const float ny = (static_cast<float>(y) - geo.cy) / geo.ry;
      float v = nx * nx + ny * ny <= 1.0f ? skin : bg;
      // eyes
      for (int side = -1; side <= 1; side += 2) {
        const float ex = (static_cast<float>(x) - (geo.cx + static_cast<float>(side) * geo.eye_dx)) / geo.eye_rx;
        const float ey = (static_cast<float>(y) - geo.eye_y) / geo.eye_ry;
        if (ex * ex + ey * ey <= 1.0f) v = dark;
      }
      img[static_cast<std::size_t>(y) * kFaceSize + x] = std::min(1.0f, std::max(0.0f, v));
    }
  }
  // mouth rectangle, height proportional to openness
  const int h = static_cast<int>(std::lround(openness * static_cast<float>(geo.mouth_max_h)));
  if (h > 0) {
    const int y0 = static_cast<int>(std::lround(geo.mouth_y)) - h / 2;
    const int x0 = static_cast<int>(std::lround(geo.cx - geo.mouth_half_w));
    const int x1 = static_cast<int>(std::lround(geo.cx + geo.mouth_half_w));
    for (int y = std::max(0, y0); y < std::min(kFaceSize, y0 + h); ++y) {
      for (int x = std::max(0, x0); x <= std::min(kFaceSize - 1, x1); ++x) {
        img[static_cast<std::size_t>(y) * kFaceSize + x] = std::min(1.0f, std::max(0.0f, mouth));
      }
    }
  }
}

}  // namespace

FaceTrackClip render_clip(int condition, int t, float fps, int sample_rate, std::uint64_t seed,
                          const RenderOptions& opts) {
  check_arg(condition >= 1 && condition <= kNumConditions, "render_clip: condition must be 1..5");
  check_arg(t >= 1 && fps > 0 && sample_rate > 0, "render_clip: bad geometry");

  const bool lips_moving = condition == 1 || condition == 2 || condition == 4;
  const bool audio_active = condition <= 3;

  Rng rng(Rng::derive(seed, 7001));
  LatentOpenness mouth;
  if (lips_moving) {
    mouth = sample_openness(t, Rng::derive(seed, 1));
  } else {
    mouth.o.assign(static_cast<std::size_t>(t), rng.uniform());  // static pose
  }

  std::vector<float> envelope(static_cast<std::size_t>(t), 0.0f);
  if (audio_active) {
    if (condition == 1) {
      envelope = mouth.o;
      if (opts.envelope_lag_frames != 0) {
        std::vector<float> lagged(envelope.size(), 0.0f);
        for (int i = 0; i < t; ++i) {
          const int src = i - opts.envelope_lag_frames;
          if (src >= 0 && src < t) lagged[static_cast<std::size_t>(i)] = envelope[static_cast<std::size_t>(src)];
        }
        envelope = std::move(lagged);
      }
    } else {
      envelope = sample_openness(t, Rng::derive(seed, 2)).o;  // independent trajectory
    }
  }

  FaceTrackClip clip;
  clip.condition = condition;
  clip.meta.face_width_px = opts.face_width_px;
  clip.meta.n_faces_in_scene = opts.n_faces_in_scene;
  clip.labels.assign(static_cast<std::size_t>(t), condition == 1 ? 1 : 0);

  const FaceGeom geo(opts.face_width_px);
  const float brightness = rng.uniform(-opts.brightness_jitter, opts.brightness_jitter);
  clip.faces.fps = fps;
  clip.faces.frames = Tensor({t, 1, kFaceSize, kFaceSize});
  for (int f = 0; f < t; ++f) {
    draw_frame(clip.faces.frames.ptr() + static_cast<std::size_t>(f) * kFaceSize * kFaceSize, geo,
               mouth.o[static_cast<std::size_t>(f)], brightness);
  }
  clip.x1 = (geo.cx - geo.rx) / kFaceSize;
  clip.y1 = (geo.cy - geo.ry) / kFaceSize;
  clip.x2 = (geo.cx + geo.rx) / kFaceSize;
  clip.y2 = (geo.cy + geo.ry) / kFaceSize;

  // white-noise carrier amplitude-modulated by the envelope, linearly
  // interpolated between video frames
  const auto n_samples = static_cast<std::size_t>(std::llround(static_cast<double>(t) / fps * sample_rate));
  clip.audio.sample_rate = sample_rate;
  clip.audio.samples.assign(n_samples, 0.0f);
  if (audio_active) {
    Rng carrier(Rng::derive(seed, 3));
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double pos = static_cast<double>(i) / sample_rate * fps;
      const int k = std::min(t - 1, static_cast<int>(pos));
      const int k1 = std::min(t - 1, k + 1);
      const auto frac = static_cast<float>(pos - k);
      const float env = (1 - frac) * envelope[static_cast<std::size_t>(k)] +
                        frac * envelope[static_cast<std::size_t>(k1)];
      clip.audio.samples[i] = 0.7f * env * carrier.uniform(-1.0f, 1.0f);
    }
  }
  return clip;
}

// ---- datasets -------------------------------------------------------------------

namespace {

json render_options_json(const RenderOptions& r) {
  return json{{"face_width_px", r.face_width_px},
              {"n_faces_in_scene", r.n_faces_in_scene},
              {"brightness_jitter", r.brightness_jitter},
              {"envelope_lag_frames", r.envelope_lag_frames}};
}

RenderOptions render_options_from(const json& j) {
  RenderOptions r;
  r.face_width_px = j.value("face_width_px", 76);
  r.n_faces_in_scene = j.value("n_faces_in_scene", 1);
  r.brightness_jitter = j.value("brightness_jitter", 0.08f);
  r.envelope_lag_frames = j.value("envelope_lag_frames", 0);
  return r;
}

}  // namespace

std::string build_dataset(const DatasetSpec& spec, const std::string& out_dir) {
  check_arg(spec.n_clips > 0, "build_dataset: need at least one clip");
  check_arg(!spec.condition_mix.empty(), "build_dataset: empty condition mix");
  double total = 0;
  for (const auto& [cond, prop] : spec.condition_mix) {
    check_arg(cond >= 1 && cond <= kNumConditions, "build_dataset: bad condition in mix");
    check_arg(prop >= 0, "build_dataset: negative proportion");
    total += prop;
  }
  check_arg(std::fabs(total - 1.0) < 1e-6, "build_dataset: proportions must sum to 1");
  check_arg(spec.duration_lo_s > 0 && spec.duration_lo_s <= spec.duration_hi_s,
            "build_dataset: bad duration range");

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("build_dataset: cannot create " + out_dir);

  // deterministic condition allocation by largest remainder, then shuffled
  std::vector<int> conditions;
  conditions.reserve(static_cast<std::size_t>(spec.n_clips));
  {
    std::vector<std::pair<double, int>> remainders;
    int assigned = 0;
    for (const auto& [cond, prop] : spec.condition_mix) {
      const double exact = prop * spec.n_clips;
      const int base = static_cast<int>(exact);
      for (int i = 0; i < base; ++i) conditions.push_back(cond);
      assigned += base;
      remainders.emplace_back(-(exact - base), cond);
    }
    std::sort(remainders.begin(), remainders.end());
    for (int i = 0; assigned + i < spec.n_clips; ++i) {
      conditions.push_back(remainders[static_cast<std::size_t>(i) % remainders.size()].second);
    }
    Rng shuffle_rng(Rng::derive(spec.seed, 99));
    for (std::size_t i = conditions.size(); i > 1; --i) {
      std::swap(conditions[i - 1], conditions[shuffle_rng.uniform_int(static_cast<std::uint32_t>(i))]);
    }
  }

  Manifest manifest;
  manifest.seed = spec.seed;
  manifest.root_dir = out_dir;

  std::ofstream csv(std::filesystem::path(out_dir) / "annotations.csv");
  if (!csv) throw IoError("build_dataset: cannot write annotations.csv");
  csv << "clip_id,frame_timestamp_s,x1,y1,x2,y2,label,track_id\n";

  for (int i = 0; i < spec.n_clips; ++i) {
    const std::uint64_t clip_seed = Rng::derive(spec.seed, static_cast<std::uint64_t>(i));
    Rng rng(Rng::derive(clip_seed, 11));
    const double dur = spec.duration_lo_s + (spec.duration_hi_s - spec.duration_lo_s) * rng.uniform();
    const int t = std::max(1, static_cast<int>(std::lround(dur * spec.fps)));

    ManifestEntry e;
    e.clip_id = "clip" + std::to_string(100000 + i);
    e.condition = conditions[static_cast<std::size_t>(i)];
    e.t = t;
    e.fps = spec.fps;
    e.sample_rate = spec.sample_rate;
    e.seed = clip_seed;
    e.render.face_width_px =
        spec.face_width_lo +
        static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(spec.face_width_hi - spec.face_width_lo + 1)));
    e.render.n_faces_in_scene = 1 + static_cast<int>(rng.uniform_int(3));
    e.label = e.condition == 1 ? 1 : 0;

    FaceTrackClip clip = render_clip(e.condition, t, spec.fps, spec.sample_rate, clip_seed, e.render);
    clip.clip_id = e.clip_id;
    if (spec.materialize) {
      e.frames_path = e.clip_id + ".tnsr";
      e.audio_path = e.clip_id + ".wav";
      save_tnsr(clip.faces.frames, (std::filesystem::path(out_dir) / e.frames_path).string());
      save_wav(clip.audio, (std::filesystem::path(out_dir) / e.audio_path).string());
    }
    for (int f = 0; f < t; ++f) {
      csv << e.clip_id << ',' << static_cast<double>(f) / spec.fps << ',' << clip.x1 << ',' << clip.y1
          << ',' << clip.x2 << ',' << clip.y2 << ','
          << (clip.labels[static_cast<std::size_t>(f)] ? "SPEAKING_AUDIBLE" : "NOT_SPEAKING") << ','
          << e.clip_id << ":0\n";
    }
    manifest.entries.push_back(std::move(e));
  }

  json j;
  j["seed"] = manifest.seed;
  j["n_clips"] = spec.n_clips;
  j["fps"] = spec.fps;
  j["sample_rate"] = spec.sample_rate;
  j["materialized"] = spec.materialize;
  json clips = json::array();
  for (const ManifestEntry& e : manifest.entries) {
    clips.push_back(json{{"clip_id", e.clip_id},
                         {"condition", e.condition},
                         {"t", e.t},
                         {"fps", e.fps},
                         {"sample_rate", e.sample_rate},
                         {"seed", e.seed},
                         {"render", render_options_json(e.render)},
                         {"label", e.label},
                         {"frames_path", e.frames_path},
                         {"audio_path", e.audio_path}});
  }
  j["clips"] = std::move(clips);
  const std::string manifest_path = (std::filesystem::path(out_dir) / "manifest.json").string();
  std::ofstream out(manifest_path);
  if (!out) throw IoError("build_dataset: cannot write manifest.json");
  out << j.dump(2) << '\n';
  return manifest_path;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_manifest: cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw IoError("load_manifest: malformed json in " + path);
  Manifest m;
  m.seed = j.value("seed", 0ULL);
  m.root_dir = std::filesystem::path(path).parent_path().string();
  for (const json& c : j.at("clips")) {
    ManifestEntry e;
    e.clip_id = c.at("clip_id").get<std::string>();
    e.condition = c.at("condition").get<int>();
    e.t = c.at("t").get<int>();
    e.fps = c.at("fps").get<float>();
    e.sample_rate = c.at("sample_rate").get<int>();
    e.seed = c.at("seed").get<std::uint64_t>();
    e.render = render_options_from(c.at("render"));
    e.label = c.at("label").get<int>();
    e.frames_path = c.value("frames_path", "");
    e.audio_path = c.value("audio_path", "");
    if (!e.frames_path.empty()) {
      e.frames_path = (std::filesystem::path(m.root_dir) / e.frames_path).string();
      e.audio_path = (std::filesystem::path(m.root_dir) / e.audio_path).string();
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

FaceTrackClip load_clip(const ManifestEntry& entry) {
  if (entry.frames_path.empty()) {
    FaceTrackClip clip = render_clip(entry.condition, entry.t, entry.fps, entry.sample_rate,
                                     entry.seed, entry.render);
    clip.clip_id = entry.clip_id;
    return clip;
  }
  FaceTrackClip clip;
  clip.clip_id = entry.clip_id;
  clip.condition = entry.condition;
  clip.meta.face_width_px = entry.render.face_width_px;
  clip.meta.n_faces_in_scene = entry.render.n_faces_in_scene;
  clip.faces.fps = entry.fps;
  clip.faces.frames = load_tnsr(entry.frames_path);
  check_arg(clip.faces.frames.ndim() == 4 && clip.faces.frames.shape[0] == entry.t,
            "load_clip: frame tensor does not match manifest for " + entry.clip_id);
  clip.audio = load_wav(entry.audio_path);
  clip.labels.assign(static_cast<std::size_t>(entry.t), entry.label);
  return clip;
}

}  // namespace asdkit
