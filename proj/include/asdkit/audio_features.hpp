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

#include <complex>
#include <string>
#include <vector>

#include "asdkit/tensor.hpp"

namespace asdkit {

struct Waveform {
  std::vector<float> samples;  // in [-1, 1]
  int sample_rate = 16000;

  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

// Cepstral frame sequence at 100 Hz, length-locked to 4 frames per video
// frame at 25 fps.
struct MfccSequence {
  Tensor frames;  // [N_a, 13]
  int hop_ms = 10;
  int window_ms = 25;

  int count() const { return frames.shape.empty() ? 0 : frames.shape[0]; }
};

inline constexpr int kMfccDim = 13;
inline constexpr int kMelFilters = 40;
inline constexpr int kFftSize = 512;
inline constexpr float kPreEmphasis = 0.97f;
inline constexpr int kAudioFramesPerVideoFrame = 4;

// Pre-emphasis -> Hamming-windowed 25 ms frames at 10 ms hop (centered,
// zero-padded edges) -> 512-point magnitude FFT -> 40 triangular mel filters
// over [0, sr/2] -> log with 1e-10 floor -> orthonormal DCT-II keeping
// c0..c12. The frame sequence is tail-padded with zero frames or truncated
// to exactly 4*T.
MfccSequence extract_mfcc(const Waveform& w, int target_video_frames);

// Trims or zero-pads to exactly T/fps seconds of samples.
Waveform align_lengths(const Waveform& w, float fps, int target_video_frames);

// Mono 16-bit PCM RIFF only; anything else is rejected with IoError.
Waveform load_wav(const std::string& path);
void save_wav(const Waveform& w, const std::string& path);

// Radix-2 FFT, n must be a power of two. Exposed for the DFT oracle tests.
void fft_inplace(std::vector<std::complex<double>>& a);

// Center frequencies (Hz) of the mel filter bank for a given sample rate.
std::vector<double> mel_filter_centers(int sample_rate);

}  // namespace asdkit
