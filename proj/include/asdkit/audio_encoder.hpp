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

#include "asdkit/audio_features.hpp"
#include "asdkit/nn.hpp"
#include "asdkit/receptive_field.hpp"
#include "asdkit/visual_encoder.hpp"  // ModelScale, kEmbedDim

namespace asdkit {

// Dilated 2-D residual stack over (time, cepstrum) with squeeze-excitation,
// downsampling time by exactly 4 so embeddings land at video frame rate.
struct AudioEncoderConfig {
  ModelScale scale = ModelScale::kDesk;

  int stem_channels = 8;
  int stem_kernel = 7;
  std::vector<int> block_channels = {8, 16, 32, 64};
  std::vector<int> block_counts = {1, 1, 1, 1};
  std::vector<int> time_strides = {1, 2, 2, 1};    // first conv of each stage
  std::vector<int> time_dilations = {1, 1, 1, 1};  // every conv of the stage
  int se_reduction = 4;
  bool use_se = true;
  int embed_dim = kEmbedDim;

  static AudioEncoderConfig paper();
  static AudioEncoderConfig desk();

  int total_time_stride() const;
  // Temporal path as LayerSpecs; the paper-scale stack has receptive field
  // 189 MFCC frames (1,890 ms at a 10 ms hop).
  std::vector<LayerSpec> temporal_layer_specs() const;
};

class AudioEncoder {
 public:
  AudioEncoder(const AudioEncoderConfig& cfg, Rng& rng);

  void reg(nn::ParamSet& ps, const std::string& prefix);

  // mfcc [N_a,13] with N_a divisible by 4 -> [N_a/4, 128]
  nn::Var encode(nn::Graph& g, const MfccSequence& mfcc, bool training);
  nn::Var encode_var(nn::Graph& g, nn::Var mfcc, bool training);

  const AudioEncoderConfig& config() const { return cfg_; }

 private:
  struct Block {
    nn::Conv2d conv1, conv2;
    nn::BatchNorm bn1, bn2;
    nn::SqueezeExcite se;
    nn::Conv2d down;
    nn::BatchNorm down_bn;
    bool has_down = false;
    int out_ch = 0;
  };

  AudioEncoderConfig cfg_;
  nn::Conv2d stem_;
  nn::BatchNorm stem_bn_;
  std::vector<Block> blocks_;
  nn::Linear proj_;
};

}  // namespace asdkit
