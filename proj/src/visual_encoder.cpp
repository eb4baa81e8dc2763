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
#include "asdkit/visual_encoder.hpp"

namespace asdkit {

using namespace nn;

VisualEncoderConfig VisualEncoderConfig::paper() {
  VisualEncoderConfig cfg;
  cfg.scale = ModelScale::kPaper;
  cfg.frontend_spatial_stride = 2;
  cfg.stem_channels = 64;
  cfg.trunk_channels = {64, 128, 256, 512};
  cfg.trunk_blocks = {2, 2, 2, 2};
  cfg.trunk_strides = {2, 2, 2, 2};
  return cfg;
}

VisualEncoderConfig VisualEncoderConfig::desk() { return VisualEncoderConfig{}; }

std::vector<LayerSpec> VisualEncoderConfig::temporal_layer_specs() const {
  std::vector<LayerSpec> specs;
  specs.push_back({frontend_temporal_kernel, 1, 1, (frontend_temporal_kernel - 1) / 2, 0});
  for (int b = 0; b < vtcn_blocks; ++b) {
    specs.push_back({vtcn_kernel, 1, 1, (vtcn_kernel - 1) / 2, 0});  // depthwise
    specs.push_back({1, 1, 1, 0, 0});                                // pointwise
  }
  specs.push_back({final_conv_kernel, 1, 1, (final_conv_kernel - 1) / 2, 0});
  return specs;
}

VisualEncoder::VisualEncoder(const VisualEncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  check_arg(cfg.trunk_channels.size() == cfg.trunk_blocks.size() &&
                cfg.trunk_channels.size() == cfg.trunk_strides.size(),
            "visual encoder: trunk stage lists disagree");
  const int kt = cfg.frontend_temporal_kernel;
  const int ks = cfg.frontend_spatial_kernel;
  ag::Conv3dArgs stem_args;
  stem_args.stride_h = stem_args.stride_w = cfg.frontend_spatial_stride;
  stem_args.pad_d = (kt - 1) / 2;
  stem_args.pad_h = stem_args.pad_w = (ks - 1) / 2;
  stem_.init(1, cfg.stem_channels, kt, ks, ks, stem_args, rng, false);
  stem_bn_.init(cfg.stem_channels, 0);

  int in_ch = cfg.stem_channels;
  for (std::size_t s = 0; s < cfg.trunk_channels.size(); ++s) {
    const int out_ch = cfg.trunk_channels[s];
    for (int b = 0; b < cfg.trunk_blocks[s]; ++b) {
      const int stride = b == 0 ? cfg.trunk_strides[s] : 1;
      TrunkBlock blk;
      ag::Conv2dArgs a1;
      a1.stride_h = a1.stride_w = stride;
      a1.pad_h = a1.pad_w = 1;
      blk.conv1.init(in_ch, out_ch, 3, 3, a1, rng, false);
      blk.bn1.init(out_ch, 1);
      ag::Conv2dArgs a2;
      a2.pad_h = a2.pad_w = 1;
      blk.conv2.init(out_ch, out_ch, 3, 3, a2, rng, false);
      blk.bn2.init(out_ch, 1);
      blk.has_down = stride != 1 || in_ch != out_ch;
      if (blk.has_down) {
        ag::Conv2dArgs ad;
        ad.stride_h = ad.stride_w = stride;
        blk.down.init(in_ch, out_ch, 1, 1, ad, rng, false);
        blk.down_bn.init(out_ch, 1);
      }
      trunk_.push_back(std::move(blk));
      in_ch = out_ch;
    }
  }

  for (int b = 0; b < cfg.vtcn_blocks; ++b) {
    VtcnBlock blk;
    blk.bn.init(in_ch, 0);
    ag::Conv1dArgs dw;
    dw.padding = (cfg.vtcn_kernel - 1) / 2;
    dw.groups = in_ch;
    blk.depthwise.init(in_ch, in_ch, cfg.vtcn_kernel, dw, rng, false);
    blk.pointwise.init(in_ch, in_ch, 1, {}, rng, true);
    vtcn_.push_back(std::move(blk));
  }
  ag::Conv1dArgs fin;
  fin.padding = (cfg.final_conv_kernel - 1) / 2;
  final_conv_.init(in_ch, cfg.embed_dim, cfg.final_conv_kernel, fin, rng, true);
}

void VisualEncoder::reg(ParamSet& ps, const std::string& prefix) {
  stem_.reg(ps, prefix + ".stem");
  stem_bn_.reg(ps, prefix + ".stem_bn");
  for (std::size_t i = 0; i < trunk_.size(); ++i) {
    const std::string p = prefix + ".trunk" + std::to_string(i);
    trunk_[i].conv1.reg(ps, p + ".conv1");
    trunk_[i].bn1.reg(ps, p + ".bn1");
    trunk_[i].conv2.reg(ps, p + ".conv2");
    trunk_[i].bn2.reg(ps, p + ".bn2");
    if (trunk_[i].has_down) {
      trunk_[i].down.reg(ps, p + ".down");
      trunk_[i].down_bn.reg(ps, p + ".down_bn");
    }
  }
  for (std::size_t i = 0; i < vtcn_.size(); ++i) {
    const std::string p = prefix + ".vtcn" + std::to_string(i);
    vtcn_[i].bn.reg(ps, p + ".bn");
    vtcn_[i].depthwise.reg(ps, p + ".dw");
    vtcn_[i].pointwise.reg(ps, p + ".pw");
  }
  final_conv_.reg(ps, prefix + ".final_conv");
}

Var VisualEncoder::frontend(Graph& g, Var faces, bool training) {
  const Tensor& fv = g.val(faces);
  check_arg(fv.ndim() == 4 && fv.shape[1] == 1 && fv.shape[2] == kFaceSize &&
                fv.shape[3] == kFaceSize,
            "visual frontend: expects [T,1,112,112], got " + fv.shape_str());
  const int t = fv.shape[0];
  // [T,1,H,W] -> [1,T,H,W] for the 3-D conv over (time, height, width)
  Var x = ag::reshape(g, faces, {1, t, kFaceSize, kFaceSize});
  x = stem_.forward(g, x);              // [C,T,h,w]
  x = stem_bn_.forward(g, x, training);
  x = ag::relu(g, x);
  x = ag::swap_first2(g, x);            // [T,C,h,w]: frames become the batch
  for (TrunkBlock& blk : trunk_) {
    Var main = blk.conv1.forward(g, x);
    main = ag::relu(g, blk.bn1.forward(g, main, training));
    main = blk.bn2.forward(g, blk.conv2.forward(g, main), training);
    Var skip = x;
    if (blk.has_down) skip = blk.down_bn.forward(g, blk.down.forward(g, skip), training);
    x = ag::relu(g, ag::add(g, main, skip));
  }
  return ag::mean_last2(g, x);  // [T,C]
}

Var VisualEncoder::temporal_network(Graph& g, Var per_frame, bool training) {
  check_arg(g.val(per_frame).ndim() == 2, "visual temporal network: expects [T,C]");
  Var x = ag::transpose(g, per_frame);  // [C,T]
  for (VtcnBlock& blk : vtcn_) {
    Var y = ag::relu(g, x);
    y = blk.bn.forward(g, y, training);
    y = blk.depthwise.forward(g, y);
    y = blk.pointwise.forward(g, y);
    x = ag::add(g, x, y);
  }
  x = final_conv_.forward(g, x);  // [128,T]
  return ag::transpose(g, x);     // [T,128]
}

Var VisualEncoder::encode(Graph& g, const FaceFrameSequence& faces, bool training) {
  check_arg(faces.length() >= 1, "visual encoder: empty face sequence");
  Var in = g.leaf(faces.frames);
  return temporal_network(g, frontend(g, in, training), training);
}

}  // namespace asdkit
