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
#include "asdkit/model.hpp"

#include "json.hpp"

namespace asdkit {

using namespace nn;
using nlohmann::json;

PipelineConfig PipelineConfig::desk(std::uint64_t seed) {
  PipelineConfig cfg;
  cfg.scale = ModelScale::kDesk;
  cfg.visual = VisualEncoderConfig::desk();
  cfg.audio = AudioEncoderConfig::desk();
  cfg.init_seed = seed;
  return cfg;
}

PipelineConfig PipelineConfig::paper(std::uint64_t seed) {
  PipelineConfig cfg;
  cfg.scale = ModelScale::kPaper;
  cfg.visual = VisualEncoderConfig::paper();
  cfg.audio = AudioEncoderConfig::paper();
  cfg.init_seed = seed;
  return cfg;
}

std::string PipelineConfig::to_json() const {
  json j;
  j["scale"] = scale == ModelScale::kPaper ? "paper" : "desk";
  j["init_seed"] = init_seed;
  json v;
  v["frontend_temporal_kernel"] = visual.frontend_temporal_kernel;
  v["frontend_spatial_kernel"] = visual.frontend_spatial_kernel;
  v["frontend_spatial_stride"] = visual.frontend_spatial_stride;
  v["stem_channels"] = visual.stem_channels;
  v["trunk_channels"] = visual.trunk_channels;
  v["trunk_blocks"] = visual.trunk_blocks;
  v["trunk_strides"] = visual.trunk_strides;
  v["vtcn_blocks"] = visual.vtcn_blocks;
  v["vtcn_kernel"] = visual.vtcn_kernel;
  v["final_conv_kernel"] = visual.final_conv_kernel;
  v["embed_dim"] = visual.embed_dim;
  j["visual"] = v;
  json a;
  a["stem_channels"] = audio.stem_channels;
  a["stem_kernel"] = audio.stem_kernel;
  a["block_channels"] = audio.block_channels;
  a["block_counts"] = audio.block_counts;
  a["time_strides"] = audio.time_strides;
  a["time_dilations"] = audio.time_dilations;
  a["se_reduction"] = audio.se_reduction;
  a["use_se"] = audio.use_se;
  a["embed_dim"] = audio.embed_dim;
  j["audio"] = a;
  json f;
  f["embed_dim"] = fusion.embed_dim;
  f["heads"] = fusion.heads;
  f["ff_mult"] = fusion.ff_mult;
  f["drop_cross"] = fusion.drop_cross;
  f["drop_self"] = fusion.drop_self;
  j["fusion"] = f;
  return j.dump();
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  check_arg(!j.is_discarded(), "pipeline config: malformed json");
  PipelineConfig cfg;
  cfg.scale = j.value("scale", "desk") == std::string("paper") ? ModelScale::kPaper : ModelScale::kDesk;
  cfg.init_seed = j.value("init_seed", 1234ULL);
  const json& v = j.at("visual");
  cfg.visual.scale = cfg.scale;
  cfg.visual.frontend_temporal_kernel = v.at("frontend_temporal_kernel").get<int>();
  cfg.visual.frontend_spatial_kernel = v.at("frontend_spatial_kernel").get<int>();
  cfg.visual.frontend_spatial_stride = v.at("frontend_spatial_stride").get<int>();
  cfg.visual.stem_channels = v.at("stem_channels").get<int>();
  cfg.visual.trunk_channels = v.at("trunk_channels").get<std::vector<int>>();
  cfg.visual.trunk_blocks = v.at("trunk_blocks").get<std::vector<int>>();
  cfg.visual.trunk_strides = v.at("trunk_strides").get<std::vector<int>>();
  cfg.visual.vtcn_blocks = v.at("vtcn_blocks").get<int>();
  cfg.visual.vtcn_kernel = v.at("vtcn_kernel").get<int>();
  cfg.visual.final_conv_kernel = v.at("final_conv_kernel").get<int>();
  cfg.visual.embed_dim = v.at("embed_dim").get<int>();
  const json& a = j.at("audio");
  cfg.audio.scale = cfg.scale;
  cfg.audio.stem_channels = a.at("stem_channels").get<int>();
  cfg.audio.stem_kernel = a.at("stem_kernel").get<int>();
  cfg.audio.block_channels = a.at("block_channels").get<std::vector<int>>();
  cfg.audio.block_counts = a.at("block_counts").get<std::vector<int>>();
  cfg.audio.time_strides = a.at("time_strides").get<std::vector<int>>();
  cfg.audio.time_dilations = a.at("time_dilations").get<std::vector<int>>();
  cfg.audio.se_reduction = a.at("se_reduction").get<int>();
  cfg.audio.use_se = a.at("use_se").get<bool>();
  cfg.audio.embed_dim = a.at("embed_dim").get<int>();
  const json& f = j.at("fusion");
  cfg.fusion.embed_dim = f.at("embed_dim").get<int>();
  cfg.fusion.heads = f.at("heads").get<int>();
  cfg.fusion.ff_mult = f.at("ff_mult").get<int>();
  cfg.fusion.drop_cross = f.at("drop_cross").get<bool>();
  cfg.fusion.drop_self = f.at("drop_self").get<bool>();
  return cfg;
}

std::uint64_t PipelineConfig::hash() const {
  const std::string s = to_json();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Pipeline::Pipeline(const PipelineConfig& cfg) : cfg_(cfg) {
  Rng rng(cfg.init_seed);
  venc_ = std::make_unique<VisualEncoder>(cfg.visual, rng);
  aenc_ = std::make_unique<AudioEncoder>(cfg.audio, rng);
  fusion_ = std::make_unique<AttentionFusion>(cfg.fusion, rng);
  clf_ = std::make_unique<Classifier>(2 * cfg.fusion.embed_dim, rng);
  venc_->reg(params_, "visual");
  aenc_->reg(params_, "audio");
  fusion_->reg(params_, "fusion");
  clf_->reg(params_, "classifier");
}

Var Pipeline::forward_logits(Graph& g, const FaceFrameSequence& faces, const MfccSequence& mfcc,
                             bool training) {
  const int t = faces.length();
  check_arg(mfcc.count() == kAudioFramesPerVideoFrame * t,
            "pipeline: MFCC frames must be exactly 4x the video frames");
  Var fv = venc_->encode(g, faces, training);
  Var fa = aenc_->encode(g, mfcc, training);
  Var joint = fusion_->forward(g, fa, fv);
  return clf_->forward_logits(g, joint);
}

Var Pipeline::forward_probs(Graph& g, const FaceFrameSequence& faces, const MfccSequence& mfcc,
                            bool training) {
  return ag::softmax(g, forward_logits(g, faces, mfcc, training), 1);
}

std::vector<real> Pipeline::score_clip(const FaceFrameSequence& faces, const MfccSequence& mfcc) {
  Graph g;
  Var probs = forward_probs(g, faces, mfcc, false);
  Var s = Classifier::scores_from_probs(g, probs);
  return g.val(s).data;
}

void Pipeline::save(const std::string& dir) const { save_param_set(params_, dir); }

void Pipeline::load(const std::string& dir) { load_param_set(params_, dir); }

}  // namespace asdkit
