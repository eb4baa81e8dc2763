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

#include "asdkit/nn.hpp"
#include "asdkit/receptive_field.hpp"

namespace asdkit {

enum class ModelScale { kPaper, kDesk };

inline constexpr int kFaceSize = 112;
inline constexpr int kEmbedDim = 128;

// T grayscale face crops plus frame rate; values in [0,1].
struct FaceFrameSequence {
  Tensor frames;  // [T,1,112,112]
  float fps = 25.0f;

  int length() const { return frames.shape.empty() ? 0 : frames.shape[0]; }
};

struct VisualEncoderConfig {
  ModelScale scale = ModelScale::kDesk;

  // frontend: 3-D conv over (time, height, width)
  int frontend_temporal_kernel = 5;
  int frontend_spatial_kernel = 7;
  int frontend_spatial_stride = 8;
  int stem_channels = 8;

  // per-frame 2-D residual trunk
  std::vector<int> trunk_channels = {8, 16, 32, 64};
  std::vector<int> trunk_blocks = {1, 1, 1, 1};
  std::vector<int> trunk_strides = {1, 2, 2, 2};

  // temporal tail: five residual ReLU/BN/depthwise-separable conv blocks,
  // then a kernel-7 conv reducing to the embedding dim
  int vtcn_blocks = 5;
  int vtcn_kernel = 3;
  int final_conv_kernel = 7;
  int embed_dim = kEmbedDim;

  static VisualEncoderConfig paper();
  static VisualEncoderConfig desk();

  // The temporal path as LayerSpecs, frontend through final conv. The
  // paper-scale stack has receptive field 21 frames (840 ms at 25 fps).
  std::vector<LayerSpec> temporal_layer_specs() const;
};

class VisualEncoder {
 public:
  explicit VisualEncoder(const VisualEncoderConfig& cfg, Rng& rng);

  void reg(nn::ParamSet& ps, const std::string& prefix);

  // [T,1,112,112] -> per-frame spatial embedding [T,C_trunk]
  nn::Var frontend(nn::Graph& g, nn::Var faces, bool training);
  // [T,C] -> [T,128]
  nn::Var temporal_network(nn::Graph& g, nn::Var per_frame, bool training);
  // full encoder; faces come in as a plain tensor
  nn::Var encode(nn::Graph& g, const FaceFrameSequence& faces, bool training);

  const VisualEncoderConfig& config() const { return cfg_; }
  int trunk_out_channels() const { return cfg_.trunk_channels.back(); }

 private:
  struct TrunkBlock {
    nn::Conv2d conv1, conv2;
    nn::BatchNorm bn1, bn2;
    nn::Conv2d down;
    nn::BatchNorm down_bn;
    bool has_down = false;
  };
  struct VtcnBlock {
    nn::BatchNorm bn;
    nn::Conv1d depthwise, pointwise;
  };

  VisualEncoderConfig cfg_;
  nn::Conv3d stem_;
  nn::BatchNorm stem_bn_;
  std::vector<TrunkBlock> trunk_;
  std::vector<VtcnBlock> vtcn_;
  nn::Conv1d final_conv_;
};

}  // namespace asdkit
