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
#include "asdkit/audio_features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace asdkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Precomputed per-sample-rate framing and filterbank tables.
struct MfccTables {
  int sample_rate;
  int win;   // window length in samples
  int hop;   // hop in samples
  std::vector<double> window;                       // Hamming
  std::vector<std::vector<double>> filters;         // [kMelFilters][kFftSize/2+1]
  std::vector<int> filter_begin, filter_end;        // nonzero bin range per filter
  std::vector<double> centers;                      // filter center freqs, Hz
  std::vector<std::vector<double>> dct;             // [kMfccDim][kMelFilters]

  explicit MfccTables(int sr) : sample_rate(sr) {
    win = sr * 25 / 1000;
    hop = sr * 10 / 1000;
    check_arg(win <= kFftSize, "MFCC window longer than the FFT size");
    window.resize(static_cast<std::size_t>(win));
    for (int n = 0; n < win; ++n) {
      window[static_cast<std::size_t>(n)] = 0.54 - 0.46 * std::cos(2.0 * kPi * n / (win - 1));
    }

    const int bins = kFftSize / 2 + 1;
    const double mel_lo = hz_to_mel(0.0);
    const double mel_hi = hz_to_mel(sr / 2.0);
    std::vector<double> edges(kMelFilters + 2);
    for (int j = 0; j < kMelFilters + 2; ++j) {
      edges[static_cast<std::size_t>(j)] =
          mel_to_hz(mel_lo + (mel_hi - mel_lo) * j / (kMelFilters + 1));
    }
    filters.assign(kMelFilters, std::vector<double>(static_cast<std::size_t>(bins), 0.0));
    filter_begin.assign(kMelFilters, 0);
    filter_end.assign(kMelFilters, 0);
    centers.assign(kMelFilters, 0.0);
    for (int k = 0; k < kMelFilters; ++k) {
      const double lo = edges[static_cast<std::size_t>(k)];
      const double mid = edges[static_cast<std::size_t>(k) + 1];
      const double hi = edges[static_cast<std::size_t>(k) + 2];
      centers[static_cast<std::size_t>(k)] = mid;
      int first = bins, last = -1;
      for (int i = 0; i < bins; ++i) {
        const double f = static_cast<double>(i) * sr / kFftSize;
        double v = 0.0;
        if (f > lo && f < mid) {
          v = (f - lo) / (mid - lo);
        } else if (f >= mid && f < hi) {
          v = (hi - f) / (hi - mid);
        }
        filters[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = v;
        if (v != 0.0) {
          first = std::min(first, i);
          last = std::max(last, i);
        }
      }
      filter_begin[static_cast<std::size_t>(k)] = std::min(first, bins - 1);
      filter_end[static_cast<std::size_t>(k)] = last + 1;
    }

    dct.assign(kMfccDim, std::vector<double>(kMelFilters, 0.0));
    for (int n = 0; n < kMfccDim; ++n) {
      const double s = n == 0 ? std::sqrt(1.0 / kMelFilters) : std::sqrt(2.0 / kMelFilters);
      for (int k = 0; k < kMelFilters; ++k) {
        dct[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] =
            s * std::cos(kPi * n * (2.0 * k + 1.0) / (2.0 * kMelFilters));
      }
    }
  }
};

const MfccTables& tables_for(int sample_rate) {
  static MfccTables t16k(16000);
  if (sample_rate == 16000) return t16k;
  thread_local MfccTables custom(16000);
  if (custom.sample_rate != sample_rate) custom = MfccTables(sample_rate);
  return custom;
}

}  // namespace

void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  check_arg(n != 0 && (n & (n - 1)) == 0, "fft: length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

std::vector<double> mel_filter_centers(int sample_rate) { return tables_for(sample_rate).centers; }

MfccSequence extract_mfcc(const Waveform& w, int target_video_frames) {
  check_arg(!w.samples.empty(), "extract_mfcc: empty waveform");
  check_arg(target_video_frames >= 1, "extract_mfcc: need at least one video frame");
  check_arg(w.sample_rate > 0, "extract_mfcc: bad sample rate");
  const MfccTables& tb = tables_for(w.sample_rate);
  check_arg(static_cast<int>(w.samples.size()) >= tb.hop,
            "extract_mfcc: waveform shorter than one hop");

  // pre-emphasis
  std::vector<double> x(w.samples.size());
  x[0] = w.samples[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    x[i] = static_cast<double>(w.samples[i]) - kPreEmphasis * w.samples[i - 1];
  }

  // centered framing: frame k spans [k*hop + hop/2 - win/2, ...), zero-padded
  const int s = static_cast<int>(x.size());
  const int raw_frames = (s + tb.hop / 2) / tb.hop;
  const int want = kAudioFramesPerVideoFrame * target_video_frames;

  Tensor out({want, kMfccDim});
  const int bins = kFftSize / 2 + 1;
  std::vector<std::complex<double>> spec(kFftSize);
  std::vector<double> mag(static_cast<std::size_t>(bins));
  std::vector<double> mel(kMelFilters);
  const int n_compute = std::min(raw_frames, want);
  for (int f = 0; f < n_compute; ++f) {
    const int start = f * tb.hop + tb.hop / 2 - tb.win / 2;
    for (int i = 0; i < kFftSize; ++i) {
      double v = 0.0;
      if (i < tb.win) {
        const int src = start + i;
        if (src >= 0 && src < s) v = x[static_cast<std::size_t>(src)] * tb.window[static_cast<std::size_t>(i)];
      }
      spec[static_cast<std::size_t>(i)] = {v, 0.0};
    }
    fft_inplace(spec);
    for (int i = 0; i < bins; ++i) {
      mag[static_cast<std::size_t>(i)] = std::abs(spec[static_cast<std::size_t>(i)]);
    }
    for (int k = 0; k < kMelFilters; ++k) {
      double e = 0.0;
      const auto& filt = tb.filters[static_cast<std::size_t>(k)];
      const int b0 = tb.filter_begin[static_cast<std::size_t>(k)];
      const int b1 = tb.filter_end[static_cast<std::size_t>(k)];
      for (int i = b0; i < b1; ++i) e += mag[static_cast<std::size_t>(i)] * filt[static_cast<std::size_t>(i)];
      mel[static_cast<std::size_t>(k)] = std::log(std::max(e, 1e-10));
    }
    for (int n = 0; n < kMfccDim; ++n) {
      double c = 0.0;
      const auto& row = tb.dct[static_cast<std::size_t>(n)];
      for (int k = 0; k < kMelFilters; ++k) c += row[static_cast<std::size_t>(k)] * mel[static_cast<std::size_t>(k)];
      out.at(f, n) = static_cast<real>(c);
    }
  }
  // rows beyond n_compute stay zero (tail padding)
  MfccSequence seq;
  seq.frames = std::move(out);
  return seq;
}

Waveform align_lengths(const Waveform& w, float fps, int target_video_frames) {
  check_arg(fps > 0, "align_lengths: fps must be positive");
  check_arg(target_video_frames >= 1, "align_lengths: need at least one frame");
  const auto want = static_cast<std::size_t>(std::llround(
      static_cast<double>(target_video_frames) / fps * w.sample_rate));
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples = w.samples;
  out.samples.resize(want, 0.0f);
  return out;
}

// ---- WAV io ---------------------------------------------------------------

namespace {

std::uint32_t rd_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t rd_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

Waveform load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw IoError("not a RIFF/WAVE file: " + path);
  }
  std::size_t pos = 12;
  int channels = 0, bits = 0, format = 0, rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_len = 0;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_len = rd_u32(bytes.data() + pos + 4);
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0 && pos + 8 + 16 <= bytes.size()) {
      const unsigned char* f = bytes.data() + pos + 8;
      format = rd_u16(f);
      channels = rd_u16(f + 2);
      rate = static_cast<int>(rd_u32(f + 4));
      bits = rd_u16(f + 14);
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      data = bytes.data() + pos + 8;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);
  }
  if (format != 1) throw IoError("wav is not uncompressed PCM: " + path);
  if (channels != 1) throw IoError("wav is not mono: " + path);
  if (bits != 16) throw IoError("wav is not 16-bit: " + path);
  if (data == nullptr || data + data_len > bytes.data() + bytes.size()) {
    throw IoError("wav has no valid data chunk: " + path);
  }
  Waveform w;
  w.sample_rate = rate;
  const std::uint32_t n = data_len / 2;
  w.samples.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto v = static_cast<std::int16_t>(data[2 * i] | (data[2 * i + 1] << 8));
    w.samples[i] = std::max(-1.0f, static_cast<float>(v) / 32767.0f);
  }
  return w;
}

void save_wav(const Waveform& w, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open wav for writing: " + path);
  const std::uint32_t data_len = static_cast<std::uint32_t>(w.samples.size() * 2);
  auto wr_u32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
  };
  auto wr_u16 = [&](std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<char*>(b), 2);
  };
  out.write("RIFF", 4);
  wr_u32(36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  wr_u32(16);
  wr_u16(1);  // PCM
  wr_u16(1);  // mono
  wr_u32(static_cast<std::uint32_t>(w.sample_rate));
  wr_u32(static_cast<std::uint32_t>(w.sample_rate * 2));
  wr_u16(2);
  wr_u16(16);
  out.write("data", 4);
  wr_u32(data_len);
  for (float s : w.samples) {
    const float clamped = std::min(1.0f, std::max(-1.0f, s));
    const auto v = static_cast<std::int16_t>(std::lrint(clamped * 32767.0f));
    wr_u16(static_cast<std::uint16_t>(v));
  }
  if (!out) throw IoError("short wav write: " + path);
}

}  // namespace asdkit
