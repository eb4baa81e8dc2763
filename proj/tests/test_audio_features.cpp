#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "asdkit/audio_features.hpp"
#include "doctest.h"

using namespace asdkit;

namespace {

Waveform noise_wave(double seconds, unsigned seed, float amp = 0.8f) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(static_cast<std::size_t>(seconds * 16000));
  for (auto& s : w.samples) s = rng.uniform(-amp, amp);
  return w;
}

}  // namespace

TEST_CASE("mfcc frame count is locked to 4 per video frame") {
  CHECK(extract_mfcc(noise_wave(1.0, 1), 25).count() == 100);
  for (int t : {1, 3, 25, 77, 250}) {
    for (double scale : {0.5, 0.8, 1.0, 1.3, 1.5}) {
      const double dur = scale * t / 25.0;
      if (dur < 0.02) continue;  // pre: at least one hop of audio
      CHECK(extract_mfcc(noise_wave(dur, 2), t).count() == 4 * t);
    }
  }
  CHECK_THROWS_AS(extract_mfcc(Waveform{}, 25), InvalidArgument);
}

TEST_CASE("silence maps every frame to the dct of the log-floor vector") {
  Waveform w;
  w.samples.assign(16000 * 6 / 5, 0.0f);  // 1.2 s so all 100 frames are real
  MfccSequence seq = extract_mfcc(w, 25);
  REQUIRE(seq.count() == 100);
  // c0 = sqrt(1/40) * 40 * ln(1e-10), higher coefficients 0
  const double c0 = std::sqrt(1.0 / kMelFilters) * kMelFilters * std::log(1e-10);
  for (int f = 0; f < seq.count(); ++f) {
    CHECK(seq.frames.at(f, 0) == doctest::Approx(c0).epsilon(1e-6));
    for (int n = 1; n < kMfccDim; ++n) CHECK(std::fabs(seq.frames.at(f, n)) < 1e-4);
    for (int n = 0; n < kMfccDim; ++n) CHECK(seq.frames.at(f, n) == seq.frames.at(0, n));
  }
}

TEST_CASE("fft matches a naive dft") {
  Rng rng(9);
  std::vector<std::complex<double>> a(512);
  for (auto& v : a) v = {rng.uniform(-1, 1), 0.0};
  std::vector<std::complex<double>> dft(512);
  for (int k = 0; k < 512; ++k) {
    std::complex<double> acc{0, 0};
    for (int n = 0; n < 512; ++n) {
      const double ang = -2.0 * 3.14159265358979323846 * k * n / 512.0;
      acc += a[static_cast<std::size_t>(n)] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    dft[static_cast<std::size_t>(k)] = acc;
  }
  fft_inplace(a);
  for (int k = 0; k < 512; ++k) {
    CHECK(std::abs(a[static_cast<std::size_t>(k)] - dft[static_cast<std::size_t>(k)]) < 1e-8);
  }
}

TEST_CASE("a 1 kHz tone concentrates mel energy at the nearest filter") {
  Waveform w;
  w.sample_rate = 16000;
  w.samples.resize(16000);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    w.samples[i] = 0.5f * std::sin(2.0 * 3.14159265358979323846 * 1000.0 * i / 16000.0);
  }
  MfccSequence seq = extract_mfcc(w, 25);

  // expected filter: center frequency nearest 1 kHz
  const std::vector<double> centers = mel_filter_centers(16000);
  int expect = 0;
  for (std::size_t k = 1; k < centers.size(); ++k) {
    if (std::fabs(centers[k] - 1000.0) < std::fabs(centers[static_cast<std::size_t>(expect)] - 1000.0)) {
      expect = static_cast<int>(k);
    }
  }

  // reconstruct approximate log-mel from the kept cepstra (inverse DCT with
  // truncated coefficients) and locate its peak; smooth single-peak spectra
  // survive the truncation
  for (int f : {10, 50, 90}) {
    int argmax = 0;
    double best = -1e30;
    for (int k = 0; k < kMelFilters; ++k) {
      double v = 0;
      for (int n = 0; n < kMfccDim; ++n) {
        const double s = n == 0 ? std::sqrt(1.0 / kMelFilters) : std::sqrt(2.0 / kMelFilters);
        v += s * seq.frames.at(f, n) *
             std::cos(3.14159265358979323846 * n * (2.0 * k + 1.0) / (2.0 * kMelFilters));
      }
      if (v > best) {
        best = v;
        argmax = k;
      }
    }
    CHECK(argmax == expect);
  }
}

TEST_CASE("doubling a waveform shifts only the dc cepstrum by a constant") {
  Waveform w = noise_wave(1.2, 21, 0.4f);
  Waveform w2 = w;
  for (auto& s : w2.samples) s *= 2.0f;
  MfccSequence a = extract_mfcc(w, 25);
  MfccSequence b = extract_mfcc(w2, 25);
  const double expected_c0_shift = std::sqrt(static_cast<double>(kMelFilters)) * std::log(2.0);
  for (int f = 0; f < a.count(); ++f) {
    CHECK(b.frames.at(f, 0) - a.frames.at(f, 0) == doctest::Approx(expected_c0_shift).epsilon(1e-4));
    for (int n = 1; n < kMfccDim; ++n) {
      CHECK(std::fabs(b.frames.at(f, n) - a.frames.at(f, n)) < 1e-4);
    }
  }
}

TEST_CASE("mfcc extraction is bit-deterministic") {
  Waveform w = noise_wave(0.9, 33);
  MfccSequence a = extract_mfcc(w, 20);
  MfccSequence b = extract_mfcc(w, 20);
  CHECK(a.frames.data == b.frames.data);
}

TEST_CASE("align_lengths trims or zero-pads to T/fps seconds") {
  Waveform exact = noise_wave(2.0, 4);
  CHECK(align_lengths(exact, 25.0f, 50).samples == exact.samples);

  Waveform shorter = noise_wave(1.9, 5);
  Waveform padded = align_lengths(shorter, 25.0f, 50);
  CHECK(padded.samples.size() == 32000);
  for (std::size_t i = shorter.samples.size(); i < padded.samples.size(); ++i) {
    CHECK(padded.samples[i] == 0.0f);
  }

  Waveform longer = noise_wave(2.2, 6);
  Waveform cut = align_lengths(longer, 25.0f, 50);
  CHECK(cut.samples.size() == 32000);
  CHECK(cut.samples[31999] == longer.samples[31999]);
}

TEST_CASE("wav io round-trips within 16-bit quantization") {
  Waveform w = noise_wave(0.3, 7);
  const std::string path = (std::filesystem::temp_directory_path() / "asdkit_t.wav").string();
  save_wav(w, path);
  Waveform r = load_wav(path);
  CHECK(r.sample_rate == 16000);
  REQUIRE(r.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    CHECK(std::fabs(r.samples[i] - w.samples[i]) < 1.0f / 32768.0f + 1e-6f);
  }
  std::remove(path.c_str());
}

TEST_CASE("wav loader rejects stereo and non-pcm files") {
  const std::string path = (std::filesystem::temp_directory_path() / "asdkit_bad.wav").string();
  // hand-build a stereo header
  Waveform w = noise_wave(0.1, 8);
  save_wav(w, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(22);  // channel count field
    const char two[2] = {2, 0};
    f.write(two, 2);
  }
  CHECK_THROWS_AS(load_wav(path), IoError);
  std::remove(path.c_str());
}
