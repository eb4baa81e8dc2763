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
#include "asdkit/audio_encoder.hpp"

namespace asdkit {

using namespace nn;

AudioEncoderConfig AudioEncoderConfig::paper() {
  AudioEncoderConfig cfg;
  cfg.scale = ModelScale::kPaper;
  cfg.stem_channels = 64;
  cfg.block_channels = {64, 128, 256, 512};
  cfg.block_counts = {3, 4, 6, 3};
  cfg.time_strides = {1, 2, 2, 1};
  cfg.time_dilations = {1, 1, 1, 1};
  cfg.se_reduction = 16;
  return cfg;
}

AudioEncoderConfig AudioEncoderConfig::desk() { return AudioEncoderConfig{}; }

int AudioEncoderConfig::total_time_stride() const {
  int s = 1;
  for (int v : time_strides) s *= v;
  return s;
}

std::vector<LayerSpec> AudioEncoderConfig::temporal_layer_specs() const {
  std::vector<LayerSpec> specs;
  specs.push_back({stem_kernel, 1, 1, (stem_kernel - 1) / 2, 0});
  for (std::size_t s = 0; s < block_counts.size(); ++s) {
    const int d = time_dilations[s];
    for (int b = 0; b < block_counts[s]; ++b) {
      const int stride = b == 0 ? time_strides[s] : 1;
      specs.push_back({3, stride, d, d, 0});
      specs.push_back({3, 1, d, d, 0});
    }
  }
  return specs;
}

AudioEncoder::AudioEncoder(const AudioEncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  check_arg(cfg.block_channels.size() == cfg.block_counts.size() &&
                cfg.block_channels.size() == cfg.time_strides.size() &&
                cfg.block_channels.size() == cfg.time_dilations.size(),
            "audio encoder: stage lists disagree");
  check_arg(cfg.total_time_stride() == kAudioFramesPerVideoFrame,
            "audio encoder: total time stride must be 4");

  ag::Conv2dArgs stem_args;
  stem_args.pad_h = stem_args.pad_w = (cfg.stem_kernel - 1) / 2;
  stem_.init(1, cfg.stem_channels, cfg.stem_kernel, cfg.stem_kernel, stem_args, rng, false);
  stem_bn_.init(cfg.stem_channels, 1);

  int in_ch = cfg.stem_channels;
  for (std::size_t s = 0; s < cfg.block_channels.size(); ++s) {
    const int out_ch = cfg.block_channels[s];
    const int dil = cfg.time_dilations[s];
    for (int b = 0; b < cfg.block_counts[s]; ++b) {
      const int stride = b == 0 ? cfg.time_strides[s] : 1;
      Block blk;
      blk.out_ch = out_ch;
      ag::Conv2dArgs a1;
      a1.stride_h = stride;  // time axis only; the 13 cepstral bins stay
      a1.dil_h = dil;
      a1.pad_h = dil;
      a1.pad_w = 1;
      blk.conv1.init(in_ch, out_ch, 3, 3, a1, rng, false);
      blk.bn1.init(out_ch, 1);
      ag::Conv2dArgs a2;
      a2.dil_h = dil;
      a2.pad_h = dil;
      a2.pad_w = 1;
      blk.conv2.init(out_ch, out_ch, 3, 3, a2, rng, false);
      blk.bn2.init(out_ch, 1);
      if (cfg.use_se) blk.se.init(out_ch, cfg.se_reduction, rng);
      blk.has_down = stride != 1 || in_ch != out_ch;
      if (blk.has_down) {
        ag::Conv2dArgs ad;
        ad.stride_h = stride;
        blk.down.init(in_ch, out_ch, 1, 1, ad, rng, false);
        blk.down_bn.init(out_ch, 1);
      }
      blocks_.push_back(std::move(blk));
      in_ch = out_ch;
    }
  }
  proj_.init(in_ch, cfg.embed_dim, rng);
}

void AudioEncoder::reg(ParamSet& ps, const std::string& prefix) {
  stem_.reg(ps, prefix + ".stem");
  stem_bn_.reg(ps, prefix + ".stem_bn");
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = prefix + ".block" + std::to_string(i);
    blocks_[i].conv1.reg(ps, p + ".conv1");
    blocks_[i].bn1.reg(ps, p + ".bn1");
    blocks_[i].conv2.reg(ps, p + ".conv2");
    blocks_[i].bn2.reg(ps, p + ".bn2");
    if (cfg_.use_se) blocks_[i].se.reg(ps, p + ".se");
    if (blocks_[i].has_down) {
      blocks_[i].down.reg(ps, p + ".down");
      blocks_[i].down_bn.reg(ps, p + ".down_bn");
    }
  }
  proj_.reg(ps, prefix + ".proj");
}

Var AudioEncoder::encode_var(Graph& g, Var mfcc, bool training) {
  const Tensor& mv = g.val(mfcc);
  check_arg(mv.ndim() == 2 && mv.shape[1] == kMfccDim, "audio encoder: expects [N_a,13]");
  const int na = mv.shape[0];
  check_arg(na % kAudioFramesPerVideoFrame == 0,
            "audio encoder: MFCC frame count must be divisible by 4");

  Var x = ag::reshape(g, mfcc, {1, 1, na, kMfccDim});
  x = ag::relu(g, stem_bn_.forward(g, stem_.forward(g, x), training));
  for (Block& blk : blocks_) {
    Var main = ag::relu(g, blk.bn1.forward(g, blk.conv1.forward(g, x), training));
    main = blk.bn2.forward(g, blk.conv2.forward(g, main), training);
    Var skip = x;
    if (blk.has_down) skip = blk.down_bn.forward(g, blk.down.forward(g, skip), training);
    x = ag::relu(g, ag::add(g, main, skip));
    if (cfg_.use_se) {
      // gate on the post-activation map: its channel means are strictly
      // positive, unlike the zero-mean batch-norm output
      const Tensor& xv2 = g.val(x);
      Var flat = ag::reshape(g, x, {xv2.shape[1], xv2.shape[2], xv2.shape[3]});
      x = ag::reshape(g, blk.se.forward(g, flat), xv2.shape);
    }
  }
  // [1,C,T,F] -> mean over cepstral bins -> [T,C] -> project to 128
  const Tensor& xv = g.val(x);
  Var squeezed = ag::reshape(g, x, {xv.shape[1], xv.shape[2], xv.shape[3]});
  Var pooled = ag::mean_last(g, squeezed);          // [C,T]
  return proj_.forward(g, ag::transpose(g, pooled));  // [T,128]
}

Var AudioEncoder::encode(Graph& g, const MfccSequence& mfcc, bool training) {
  return encode_var(g, g.leaf(mfcc.frames), training);
}

}  // namespace asdkit
