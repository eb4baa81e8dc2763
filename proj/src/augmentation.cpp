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
#include "asdkit/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace asdkit {

namespace {

double rms_of(const Waveform& w) {
  if (w.samples.empty()) return 0.0;
  double acc = 0;
  for (float s : w.samples) acc += static_cast<double>(s) * s;
  return std::sqrt(acc / static_cast<double>(w.samples.size()));
}

}  // namespace

MixResult negative_sample_mix(const Waveform& primary, const Waveform& noise, float snr_db) {
  check_arg(primary.sample_rate == noise.sample_rate,
            "negative_sample_mix: sample rates must match");
  MixResult res;
  res.out = primary;
  const double noise_rms = rms_of(noise);
  if (noise_rms < 1e-8 || noise.samples.empty()) {
    res.silent_noise = true;
    return res;
  }
  const double gain = rms_of(primary) / (noise_rms * std::pow(10.0, snr_db / 20.0));
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < res.out.samples.size(); ++i) {
    const float n = noise.samples[i % noise.samples.size()];  // loop to length
    float v = res.out.samples[i] + static_cast<float>(gain) * n;
    if (v > 1.0f) {
      v = 1.0f;
      ++clipped;
    } else if (v < -1.0f) {
      v = -1.0f;
      ++clipped;
    }
    res.out.samples[i] = v;
  }
  if (!res.out.samples.empty()) {
    res.clipped_fraction = static_cast<float>(clipped) / static_cast<float>(res.out.samples.size());
  }
  return res;
}

MixResult external_noise_mix(const Waveform& primary, const std::string& noise_dir, float snr_lo,
                             float snr_hi, std::uint64_t seed) {
  check_arg(snr_lo <= snr_hi, "external_noise_mix: snr range inverted");
  std::vector<std::string> files;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(noise_dir, ec)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path().string());
  }
  check_arg(!ec && !files.empty(), "external_noise_mix: no wav files in " + noise_dir);
  std::sort(files.begin(), files.end());
  Rng rng(seed);
  const Waveform noise = load_wav(files[rng.uniform_int(static_cast<std::uint32_t>(files.size()))]);
  const float snr = rng.uniform(snr_lo, snr_hi);
  return negative_sample_mix(primary, noise, snr);
}

namespace {

float bilinear(const real* img, int h, int w, float y, float x) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const float fx = x - static_cast<float>(x0);
  const float fy = y - static_cast<float>(y0);
  auto px = [&](int yy, int xx) -> float {
    if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0f;
    return img[static_cast<std::size_t>(yy) * w + xx];
  };
  return (1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x0 + 1)) +
         fy * ((1 - fx) * px(y0 + 1, x0) + fx * px(y0 + 1, x0 + 1));
}

}  // namespace

FaceFrameSequence visual_augment(const FaceFrameSequence& frames, const VisualAugmentParams& params,
                                 std::uint64_t seed) {
  check_arg(params.flip_prob >= 0.0f && params.flip_prob <= 1.0f, "visual_augment: bad flip_prob");
  check_arg(params.crop_scale_min > 0.0f && params.crop_scale_min <= 1.0f,
            "visual_augment: crop_scale_min must be in (0,1]");
  const int t = frames.length();
  check_arg(t >= 1, "visual_augment: empty clip");

  Rng rng(seed);
  const bool flip = rng.uniform() < params.flip_prob;
  const float angle = rng.uniform(-params.rotate_deg_max, params.rotate_deg_max);
  const float crop_scale = rng.uniform(params.crop_scale_min, 1.0f);
  const int crop_size = std::max(1, static_cast<int>(std::lround(crop_scale * kFaceSize)));
  const int max_off = kFaceSize - crop_size;
  const int off_x = max_off > 0 ? static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(max_off + 1))) : 0;
  const int off_y = max_off > 0 ? static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(max_off + 1))) : 0;

  const bool identity = !flip && angle == 0.0f && crop_size == kFaceSize && off_x == 0 && off_y == 0;
  FaceFrameSequence out;
  out.fps = frames.fps;
  if (identity) {
    out.frames = frames.frames;
    return out;
  }

  const float rad = angle * 3.14159265358979323846f / 180.0f;
  const float cs = std::cos(rad), sn = std::sin(rad);
  const float c = (kFaceSize - 1) / 2.0f;

  out.frames = Tensor::zeros({t, 1, kFaceSize, kFaceSize});
  const std::size_t fsz = static_cast<std::size_t>(kFaceSize) * kFaceSize;
  std::vector<real> work(fsz);
  for (int f = 0; f < t; ++f) {
    const real* src = frames.frames.ptr() + static_cast<std::size_t>(f) * fsz;
    // flip + rotate in one inverse map into `work`
    for (int y = 0; y < kFaceSize; ++y) {
      for (int x = 0; x < kFaceSize; ++x) {
        const float dx = static_cast<float>(x) - c;
        const float dy = static_cast<float>(y) - c;
        float sx = cs * dx - sn * dy + c;
        const float sy = sn * dx + cs * dy + c;
        if (flip) sx = static_cast<float>(kFaceSize - 1) - sx;
        work[static_cast<std::size_t>(y) * kFaceSize + x] = bilinear(src, kFaceSize, kFaceSize, sy, sx);
      }
    }
    // crop + resize back to 112
    real* dst = out.frames.ptr() + static_cast<std::size_t>(f) * fsz;
    const float step = static_cast<float>(crop_size) / kFaceSize;
    for (int y = 0; y < kFaceSize; ++y) {
      for (int x = 0; x < kFaceSize; ++x) {
        const float sy = static_cast<float>(off_y) + (static_cast<float>(y) + 0.5f) * step - 0.5f;
        const float sx = static_cast<float>(off_x) + (static_cast<float>(x) + 0.5f) * step - 0.5f;
        dst[static_cast<std::size_t>(y) * kFaceSize + x] =
            bilinear(work.data(), kFaceSize, kFaceSize, sy, sx);
      }
    }
  }
  return out;
}

Waveform rir_convolve(const Waveform&, const Waveform&) {
  throw NotImplemented("rir_convolve: room impulse response augmentation is not implemented");
}

}  // namespace asdkit
