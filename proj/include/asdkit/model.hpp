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

#include <memory>
#include <string>

#include "asdkit/attention.hpp"
#include "asdkit/audio_encoder.hpp"
#include "asdkit/classifier.hpp"
#include "asdkit/visual_encoder.hpp"

namespace asdkit {

struct PipelineConfig {
  ModelScale scale = ModelScale::kDesk;
  VisualEncoderConfig visual;
  AudioEncoderConfig audio;
  FusionConfig fusion;
  std::uint64_t init_seed = 1234;

  static PipelineConfig desk(std::uint64_t seed = 1234);
  static PipelineConfig paper(std::uint64_t seed = 1234);

  std::string to_json() const;
  static PipelineConfig from_json(const std::string& text);
  std::uint64_t hash() const;  // FNV-1a of the canonical JSON
};

// Face track + aligned audio in, per-frame speaking probabilities out.
class Pipeline {
 public:
  Pipeline(const PipelineConfig& cfg);

  nn::ParamSet& params() { return params_; }
  const PipelineConfig& config() const { return cfg_; }

  VisualEncoder& visual() { return *venc_; }
  AudioEncoder& audio() { return *aenc_; }
  AttentionFusion& fusion() { return *fusion_; }
  Classifier& classifier() { return *clf_; }

  // [T,2] per-frame class logits / probabilities. mfcc length must be 4T.
  nn::Var forward_logits(nn::Graph& g, const FaceFrameSequence& faces, const MfccSequence& mfcc,
                         bool training);
  nn::Var forward_probs(nn::Graph& g, const FaceFrameSequence& faces, const MfccSequence& mfcc,
                        bool training);

  // Convenience eval path: plain score vector, deterministic in eval mode.
  std::vector<real> score_clip(const FaceFrameSequence& faces, const MfccSequence& mfcc);

  void save(const std::string& dir) const;
  void load(const std::string& dir);

 private:
  PipelineConfig cfg_;
  std::unique_ptr<VisualEncoder> venc_;
  std::unique_ptr<AudioEncoder> aenc_;
  std::unique_ptr<AttentionFusion> fusion_;
  std::unique_ptr<Classifier> clf_;
  nn::ParamSet params_;
};

}  // namespace asdkit
