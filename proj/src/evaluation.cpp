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
#include "asdkit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace asdkit {

double average_precision(const std::vector<ScoredFrame>& frames) {
  std::int64_t positives = 0;
  for (const ScoredFrame& f : frames) {
    check_arg(f.label == 0 || f.label == 1, "average_precision: labels must be binary");
    check_arg(std::isfinite(f.score), "average_precision: scores must be finite");
    positives += f.label;
  }
  if (positives == 0) throw UndefinedMetric("average_precision: no positive frames");

  std::vector<const ScoredFrame*> order;
  order.reserve(frames.size());
  for (const ScoredFrame& f : frames) order.push_back(&f);
  std::stable_sort(order.begin(), order.end(), [](const ScoredFrame* a, const ScoredFrame* b) {
    if (a->score != b->score) return a->score > b->score;
    if (a->clip_id != b->clip_id) return a->clip_id < b->clip_id;
    return a->frame_index < b->frame_index;
  });

  double ap = 0.0;
  std::int64_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (order[k]->label == 1) {
      ++tp;
      ap += static_cast<double>(tp) / static_cast<double>(k + 1);
    }
  }
  return ap / static_cast<double>(positives);
}

double f1_score(const std::vector<ScoredFrame>& frames, float threshold) {
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (const ScoredFrame& f : frames) {
    const bool pred = f.score >= threshold;
    if (pred && f.label == 1) ++tp;
    if (pred && f.label == 0) ++fp;
    if (!pred && f.label == 1) ++fn;
  }
  const std::int64_t denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

std::vector<BreakdownRow> breakdown(const std::vector<ScoredFrame>& frames, Facet facet) {
  std::vector<std::pair<std::string, std::vector<ScoredFrame>>> buckets;
  if (facet == Facet::kFaceSize) {
    buckets = {{"small", {}}, {"middle", {}}, {"large", {}}};
    for (const ScoredFrame& f : frames) {
      if (f.face_width_px < 64) {
        buckets[0].second.push_back(f);
      } else if (f.face_width_px <= 128) {
        buckets[1].second.push_back(f);
      } else {
        buckets[2].second.push_back(f);
      }
    }
  } else {
    buckets = {{"1", {}}, {"2", {}}, {"3", {}}};
    for (const ScoredFrame& f : frames) {
      if (f.n_faces >= 1 && f.n_faces <= 3) buckets[static_cast<std::size_t>(f.n_faces - 1)].second.push_back(f);
    }
  }
  std::vector<BreakdownRow> rows;
  for (auto& [name, members] : buckets) {
    if (members.empty()) continue;
    BreakdownRow row;
    row.bucket = name;
    row.count = static_cast<std::int64_t>(members.size());
    try {
      row.ap = average_precision(members);
      row.ap_defined = true;
    } catch (const UndefinedMetric&) {
      row.ap_defined = false;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string metrics_report_json(const std::vector<ScoredFrame>& frames) {
  nlohmann::json j;
  j["frames"] = frames.size();
  j["map"] = average_precision(frames);
  j["f1"] = f1_score(frames);
  nlohmann::json buckets;
  for (auto facet : {Facet::kFaceSize, Facet::kNFaces}) {
    nlohmann::json rows = nlohmann::json::array();
    for (const BreakdownRow& r : breakdown(frames, facet)) {
      nlohmann::json row;
      row["bucket"] = r.bucket;
      row["count"] = r.count;
      if (r.ap_defined) {
        row["map"] = r.ap;
      } else {
        row["map"] = nullptr;
      }
      rows.push_back(std::move(row));
    }
    buckets[facet == Facet::kFaceSize ? "face_size" : "n_faces"] = std::move(rows);
  }
  j["buckets"] = std::move(buckets);
  return j.dump(2);
}

void write_scores_csv(const std::vector<ScoredFrame>& frames, const std::string& path,
                      bool with_label) {
  std::ofstream out(path);
  if (!out) throw IoError("write_scores_csv: cannot open " + path);
  out << (with_label ? "clip_id,frame_index,score,label\n" : "clip_id,frame_index,score\n");
  out.precision(9);
  for (const ScoredFrame& f : frames) {
    out << f.clip_id << ',' << f.frame_index << ',' << f.score;
    if (with_label) out << ',' << f.label;
    out << '\n';
  }
}

std::vector<ScoredFrame> read_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_scores_csv: cannot open " + path);
  std::vector<ScoredFrame> frames;
  std::string line;
  std::getline(in, line);  // header
  const bool with_label = line.find("label") != std::string::npos;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    ScoredFrame f;
    std::string field;
    std::getline(ss, f.clip_id, ',');
    std::getline(ss, field, ',');
    f.frame_index = std::stoi(field);
    std::getline(ss, field, ',');
    f.score = std::stof(field);
    if (with_label && std::getline(ss, field, ',')) f.label = std::stoi(field);
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace asdkit
