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

#include <string>
#include <vector>

#include "asdkit/common.hpp"

namespace asdkit {

struct ScoredFrame {
  std::string clip_id;
  int frame_index = 0;
  float score = 0.0f;
  int label = 0;
  int face_width_px = 0;
  int n_faces = 0;
};

// Pascal-style unsmoothed average precision of the speaking class over all
// scored frames: sort by score descending (stable; ties broken by
// (clip_id, frame_index)), then average precision-at-k over the positive
// ranks. Throws UndefinedMetric when there is no positive frame.
double average_precision(const std::vector<ScoredFrame>& frames);

// F1 at a hard threshold (prediction = score >= threshold); 0 when the
// precision/recall pair is empty.
double f1_score(const std::vector<ScoredFrame>& frames, float threshold = 0.5f);

enum class Facet { kFaceSize, kNFaces };

struct BreakdownRow {
  std::string bucket;
  double ap = 0.0;
  bool ap_defined = false;
  std::int64_t count = 0;
};

// Per-bucket AP over face-size buckets {<64, 64-128, >128} px or visible
// face counts {1,2,3}; empty buckets are omitted.
std::vector<BreakdownRow> breakdown(const std::vector<ScoredFrame>& frames, Facet facet);

// {"map":..., "f1":..., "buckets":{...}} serialized deterministically.
std::string metrics_report_json(const std::vector<ScoredFrame>& frames);

// Score CSV: clip_id,frame_index,score[,label]
void write_scores_csv(const std::vector<ScoredFrame>& frames, const std::string& path,
                      bool with_label = true);
std::vector<ScoredFrame> read_scores_csv(const std::string& path);

}  // namespace asdkit
