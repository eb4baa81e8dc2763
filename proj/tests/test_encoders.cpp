#include <cmath>

#include "asdkit/audio_encoder.hpp"
#include "asdkit/visual_encoder.hpp"
#include "doctest.h"

using namespace asdkit;
using namespace asdkit::nn;

namespace {

FaceFrameSequence random_faces(int t, unsigned seed) {
  Rng rng(seed);
  FaceFrameSequence f;
  f.frames = Tensor::uniform({t, 1, kFaceSize, kFaceSize}, 0.0f, 1.0f, rng);
  return f;
}

MfccSequence random_mfcc(int n, unsigned seed) {
  Rng rng(seed);
  MfccSequence m;
  m.frames = Tensor::uniform({n, kMfccDim}, -2.0f, 2.0f, rng);
  return m;
}

}  // namespace

TEST_CASE("paper-scale temporal receptive fields match the shipped configs") {
  CHECK(compute_receptive_field(VisualEncoderConfig::paper().temporal_layer_specs()) == 21);
  CHECK(compute_receptive_field(VisualEncoderConfig::desk().temporal_layer_specs()) == 21);
  CHECK(compute_receptive_field(AudioEncoderConfig::paper().temporal_layer_specs()) == 189);
  CHECK(AudioEncoderConfig::paper().total_time_stride() == 4);
  CHECK(AudioEncoderConfig::desk().total_time_stride() == 4);
}

TEST_CASE("visual encoder output is [T,128] for any T") {
  Rng rng(71);
  VisualEncoder enc(VisualEncoderConfig::desk(), rng);
  Graph g;
  for (int t : {1, 7, 25}) {
    Var out = enc.encode(g, random_faces(t, 100 + static_cast<unsigned>(t)), false);
    CHECK(g.val(out).shape == std::vector<int>{t, kEmbedDim});
  }
  FaceFrameSequence bad;
  bad.frames = Tensor({2, 1, 64, 64});
  CHECK_THROWS_AS(enc.encode(g, bad, false), InvalidArgument);
}

TEST_CASE("visual encoder is deterministic in eval mode") {
  Rng rng(72);
  VisualEncoder enc(VisualEncoderConfig::desk(), rng);
  FaceFrameSequence faces = random_faces(5, 200);
  Graph g1, g2;
  Var a = enc.encode(g1, faces, false);
  Var b = enc.encode(g2, faces, false);
  CHECK(g1.val(a).data == g2.val(b).data);

  // different inputs produce different embeddings
  FaceFrameSequence zeros, ones;
  zeros.frames = Tensor::zeros({3, 1, kFaceSize, kFaceSize});
  ones.frames = Tensor::full({3, 1, kFaceSize, kFaceSize}, 1.0f);
  Graph g3, g4;
  const Tensor& e0 = g3.val(enc.encode(g3, zeros, false));
  const Tensor& e1 = g4.val(enc.encode(g4, ones, false));
  real diff = 0;
  for (std::size_t i = 0; i < e0.data.size(); ++i) diff += std::fabs(e0.data[i] - e1.data[i]);
  CHECK(diff > 1e-3f);
}

TEST_CASE("vtcn at init propagates zeros in eval mode") {
  Rng rng(73);
  VisualEncoder enc(VisualEncoderConfig::desk(), rng);
  Graph g;
  Var zero_in = g.leaf(Tensor::zeros({12, VisualEncoderConfig::desk().trunk_channels.back()}));
  Var out = enc.temporal_network(g, zero_in, false);
  for (real v : g.val(out).data) CHECK(v == 0.0f);
}

TEST_CASE("visual impulse perturbs exactly the 21-frame window") {
  Rng rng(74);
  VisualEncoderConfig cfg = VisualEncoderConfig::desk();
  VisualEncoder enc(cfg, rng);
  const int t = 64;
  FaceFrameSequence base = random_faces(t, 300);
  Graph g0;
  const Tensor y0 = g0.val(enc.encode(g0, base, false));

  const int probe = 32;
  FaceFrameSequence pert = base;
  for (int i = 0; i < kFaceSize * kFaceSize; ++i) {
    pert.frames.data[static_cast<std::size_t>(probe) * kFaceSize * kFaceSize + i] += 0.5f;
  }
  Graph g1;
  const Tensor y1 = g1.val(enc.encode(g1, pert, false));

  IndexRange expect = affected_interval(cfg.temporal_layer_specs(), t, probe, probe);
  CHECK(expect.lo == probe - 10);
  CHECK(expect.hi == probe + 10);
  for (int i = 0; i < t; ++i) {
    real diff = 0;
    for (int j = 0; j < kEmbedDim; ++j) diff += std::fabs(y1.at(i, j) - y0.at(i, j));
    const bool inside = i >= expect.lo && i <= expect.hi;
    CHECK((diff > 1e-6f) == inside);
  }
}

TEST_CASE("visual encoding is translation-equivariant on interior frames") {
  Rng rng(75);
  VisualEncoder enc(VisualEncoderConfig::desk(), rng);
  const int t = 40, shift = 5;
  FaceFrameSequence base = random_faces(t, 400);
  FaceFrameSequence shifted;
  shifted.frames = Tensor::zeros({t, 1, kFaceSize, kFaceSize});
  const std::size_t frame_sz = static_cast<std::size_t>(kFaceSize) * kFaceSize;
  for (int i = shift; i < t; ++i) {
    std::copy_n(base.frames.data.begin() + static_cast<std::ptrdiff_t>((i - shift) * frame_sz),
                frame_sz, shifted.frames.data.begin() + static_cast<std::ptrdiff_t>(i * frame_sz));
  }
  Graph g0, g1;
  const Tensor& y0 = g0.val(enc.encode(g0, base, false));
  const Tensor& y1 = g1.val(enc.encode(g1, shifted, false));
  for (int i = 15; i <= 29; ++i) {  // >= RF/2 from both boundaries in both sequences
    for (int j = 0; j < kEmbedDim; ++j) {
      CHECK(y1.at(i, j) == doctest::Approx(y0.at(i - shift, j)).epsilon(1e-5));
    }
  }
}

TEST_CASE("audio encoder output is [T,128] with exact x4 downsampling") {
  Rng rng(81);
  AudioEncoder enc(AudioEncoderConfig::desk(), rng);
  Graph g;
  Var out = enc.encode(g, random_mfcc(100, 500), false);
  CHECK(g.val(out).shape == std::vector<int>{25, kEmbedDim});
  CHECK_THROWS_AS(enc.encode(g, random_mfcc(101, 501), false), InvalidArgument);
}

TEST_CASE("audio impulse perturbs exactly the predicted output window") {
  Rng rng(82);
  AudioEncoderConfig cfg = AudioEncoderConfig::desk();
  cfg.use_se = false;  // the SE gate is a global channel stat, not part of the conv RF
  AudioEncoder enc(cfg, rng);
  const int na = 128;
  MfccSequence base = random_mfcc(na, 600);
  Graph g0;
  const Tensor y0 = g0.val(enc.encode(g0, base, false));

  for (int probe : {9, 64}) {
    MfccSequence pert = base;
    for (int j = 0; j < kMfccDim; ++j) pert.frames.at(probe, j) += 1.0f;
    Graph g1;
    const Tensor y1 = g1.val(enc.encode(g1, pert, false));
    IndexRange expect = affected_interval(cfg.temporal_layer_specs(), na, probe, probe);
    for (int i = 0; i < y0.shape[0]; ++i) {
      real diff = 0;
      for (int j = 0; j < kEmbedDim; ++j) diff += std::fabs(y1.at(i, j) - y0.at(i, j));
      const bool inside = i >= expect.lo && i <= expect.hi;
      CHECK((diff > 1e-6f) == inside);
    }
  }
}

TEST_CASE("squeeze-excite identity bias and sigmoid bound") {
  Rng rng(83);
  SqueezeExcite se;
  se.init(8, 4, rng);

  // zeroed bottleneck with a large positive output bias gates every channel
  // at ~1: output equals input
  for (auto& v : se.fc1.weight.value.data) v = 0;
  for (auto& v : se.fc2.weight.value.data) v = 0;
  for (auto& v : se.fc2.bias.value.data) v = 25.0f;
  Graph g;
  Tensor x = Tensor::uniform({8, 4, 3}, -1, 1, rng);
  Var out = se.forward(g, g.leaf(x));
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    CHECK(g.val(out).data[i] == doctest::Approx(x.data[i]).epsilon(1e-6));
  }

  // random gates never increase any channel magnitude
  SqueezeExcite se2;
  se2.init(8, 4, rng);
  Graph g2;
  Var out2 = se2.forward(g2, g2.leaf(x));
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    CHECK(std::fabs(g2.val(out2).data[i]) <= std::fabs(x.data[i]) + 1e-7f);
  }
}

TEST_CASE("squeeze-excite matches a direct formula evaluation") {
  Rng rng(84);
  SqueezeExcite se;
  se.init(4, 2, rng);
  Tensor x = Tensor::uniform({4, 3, 2}, -1, 1, rng);
  Graph g;
  const Tensor& got = g.val(se.forward(g, g.leaf(x)));

  double pooled[4];
  for (int c = 0; c < 4; ++c) {
    double s = 0;
    for (int i = 0; i < 6; ++i) s += x.data[static_cast<std::size_t>(c) * 6 + i];
    pooled[c] = s / 6.0;
  }
  double hidden[2];
  for (int h = 0; h < 2; ++h) {
    double s = se.fc1.bias.value.data[static_cast<std::size_t>(h)];
    for (int c = 0; c < 4; ++c) s += se.fc1.weight.value.at(h, c) * pooled[c];
    hidden[h] = std::max(0.0, s);
  }
  for (int c = 0; c < 4; ++c) {
    double s = se.fc2.bias.value.data[static_cast<std::size_t>(c)];
    for (int h = 0; h < 2; ++h) s += se.fc2.weight.value.at(c, h) * hidden[h];
    const double gate = 1.0 / (1.0 + std::exp(-s));
    for (int i = 0; i < 6; ++i) {
      CHECK(got.data[static_cast<std::size_t>(c) * 6 + i] ==
            doctest::Approx(x.data[static_cast<std::size_t>(c) * 6 + i] * gate).epsilon(1e-5));
    }
  }
}
