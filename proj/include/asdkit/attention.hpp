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

#include <utility>

#include "asdkit/nn.hpp"

namespace asdkit {

struct FusionConfig {
  int embed_dim = 128;
  int heads = 8;
  int ff_mult = 4;
  // Ablations replace the dropped attention stage by a learned
  // dimension-preserving linear projection.
  bool drop_cross = false;
  bool drop_self = false;
};

// Cross-attention between the two modality streams, feature-axis
// concatenation of the attended pair, and one self-attention layer over the
// joint sequence. No positional encoding anywhere, so the whole stage is
// permutation-equivariant in time.
class AttentionFusion {
 public:
  AttentionFusion(const FusionConfig& cfg, Rng& rng);

  void reg(nn::ParamSet& ps, const std::string& prefix);

  // {audio-attended, visual-attended}: the first uses the visual stream as
  // query target over audio keys/values, the second the reverse.
  std::pair<nn::Var, nn::Var> cross_attention(nn::Graph& g, nn::Var f_audio, nn::Var f_visual);

  // [T,128]+[T,128] -> [T,256]; audio-attended stream first.
  nn::Var fuse(nn::Graph& g, nn::Var audio_attended, nn::Var visual_attended);

  // One transformer layer where query, key and value all come from the
  // joint sequence.
  nn::Var self_attention(nn::Graph& g, nn::Var joint);

  nn::Var forward(nn::Graph& g, nn::Var f_audio, nn::Var f_visual);

  const FusionConfig& config() const { return cfg_; }

 private:
  FusionConfig cfg_;
  nn::TransformerBlock cross_audio_;   // target F_v, source F_a
  nn::TransformerBlock cross_visual_;  // target F_a, source F_v
  nn::TransformerBlock self_;
  nn::Linear proj_audio_, proj_visual_, proj_joint_;
};

}  // namespace asdkit
