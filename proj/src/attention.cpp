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
#include "asdkit/attention.hpp"

namespace asdkit {

using namespace nn;

AttentionFusion::AttentionFusion(const FusionConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.drop_cross) {
    proj_audio_.init(cfg.embed_dim, cfg.embed_dim, rng);
    proj_visual_.init(cfg.embed_dim, cfg.embed_dim, rng);
  } else {
    cross_audio_.init(cfg.embed_dim, cfg.heads, cfg.ff_mult, rng);
    cross_visual_.init(cfg.embed_dim, cfg.heads, cfg.ff_mult, rng);
  }
  if (cfg.drop_self) {
    proj_joint_.init(2 * cfg.embed_dim, 2 * cfg.embed_dim, rng);
  } else {
    self_.init(2 * cfg.embed_dim, cfg.heads, cfg.ff_mult, rng);
  }
}

void AttentionFusion::reg(ParamSet& ps, const std::string& prefix) {
  if (cfg_.drop_cross) {
    proj_audio_.reg(ps, prefix + ".proj_audio");
    proj_visual_.reg(ps, prefix + ".proj_visual");
  } else {
    cross_audio_.reg(ps, prefix + ".cross_audio");
    cross_visual_.reg(ps, prefix + ".cross_visual");
  }
  if (cfg_.drop_self) {
    proj_joint_.reg(ps, prefix + ".proj_joint");
  } else {
    self_.reg(ps, prefix + ".self");
  }
}

std::pair<Var, Var> AttentionFusion::cross_attention(Graph& g, Var f_audio, Var f_visual) {
  const Tensor& fa = g.val(f_audio);
  const Tensor& fv = g.val(f_visual);
  check_arg(fa.ndim() == 2 && fv.ndim() == 2 && fa.shape[1] == cfg_.embed_dim &&
                fv.shape[1] == cfg_.embed_dim,
            "cross_attention: embeddings must be [T,128]");
  check_arg(fa.shape[0] == fv.shape[0],
            "cross_attention: audio and visual sequence lengths must match");
  if (cfg_.drop_cross) {
    return {proj_audio_.forward(g, f_audio), proj_visual_.forward(g, f_visual)};
  }
  Var audio_attended = cross_audio_.forward(g, f_visual, f_audio);
  Var visual_attended = cross_visual_.forward(g, f_audio, f_visual);
  return {audio_attended, visual_attended};
}

Var AttentionFusion::fuse(Graph& g, Var audio_attended, Var visual_attended) {
  return ag::concat_cols(g, audio_attended, visual_attended);
}

Var AttentionFusion::self_attention(Graph& g, Var joint) {
  check_arg(g.val(joint).shape[1] == 2 * cfg_.embed_dim, "self_attention: expects [T,256]");
  if (cfg_.drop_self) return proj_joint_.forward(g, joint);
  return self_.forward(g, joint, joint);
}

Var AttentionFusion::forward(Graph& g, Var f_audio, Var f_visual) {
  auto [audio_attended, visual_attended] = cross_attention(g, f_audio, f_visual);
  return self_attention(g, fuse(g, audio_attended, visual_attended));
}

}  // namespace asdkit
