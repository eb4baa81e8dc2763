#include <cmath>
#include <cstdio>
#include <filesystem>

#include "asdkit/evaluation.hpp"
#include "asdkit/rng.hpp"
#include "doctest.h"

using namespace asdkit;

namespace {

std::vector<ScoredFrame> make_frames(const std::vector<float>& scores,
                                     const std::vector<int>& labels) {
  std::vector<ScoredFrame> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    ScoredFrame f;
    f.clip_id = "c";
    f.frame_index = static_cast<int>(i);
    f.score = scores[i];
    f.label = labels[i];
    out.push_back(f);
  }
  return out;
}

// First-principles AP oracle: rescans every prefix of the ranked list.
double brute_force_ap(std::vector<ScoredFrame> frames) {
  std::stable_sort(frames.begin(), frames.end(), [](const ScoredFrame& a, const ScoredFrame& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.clip_id != b.clip_id) return a.clip_id < b.clip_id;
    return a.frame_index < b.frame_index;
  });
  std::int64_t positives = 0;
  for (const auto& f : frames) positives += f.label;
  double ap = 0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (frames[k].label != 1) continue;
    std::int64_t tp = 0;
    for (std::size_t i = 0; i <= k; ++i) tp += frames[i].label;
    ap += static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  return ap / static_cast<double>(positives);
}

}  // namespace

TEST_CASE("average precision reproduces the worked ranking") {
  const double ap = average_precision(make_frames({0.9f, 0.8f, 0.7f}, {1, 0, 1}));
  CHECK(ap == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));
  CHECK(std::fabs(ap - 0.833333333333) < 1e-9);
}

TEST_CASE("perfect rankings and all-positive labelings give AP 1") {
  CHECK(average_precision(make_frames({0.9f, 0.8f, 0.2f, 0.1f}, {1, 1, 0, 0})) == 1.0);
  CHECK(average_precision(make_frames({0.1f, 0.6f, 0.3f}, {1, 1, 1})) == 1.0);
}

TEST_CASE("zero positives is an undefined metric") {
  CHECK_THROWS_AS(average_precision(make_frames({0.5f, 0.4f}, {0, 0})), UndefinedMetric);
}

TEST_CASE("AP equals the brute-force oracle on every labeling of 8 frames") {
  Rng rng(3);
  std::vector<float> scores(8);
  for (auto& s : scores) s = rng.uniform();  // distinct with probability 1
  for (int mask = 1; mask < 256; ++mask) {
    std::vector<int> labels(8);
    for (int b = 0; b < 8; ++b) labels[static_cast<std::size_t>(b)] = (mask >> b) & 1;
    auto frames = make_frames(scores, labels);
    CHECK(average_precision(frames) == brute_force_ap(frames));
  }
}

TEST_CASE("AP is invariant under strictly monotonic score transforms") {
  Rng rng(4);
  std::vector<float> scores(20);
  std::vector<int> labels(20);
  for (auto& s : scores) s = rng.uniform();
  for (auto& l : labels) l = rng.uniform() < 0.4f ? 1 : 0;
  labels[0] = 1;
  const double base = average_precision(make_frames(scores, labels));

  std::vector<float> squared = scores, affine = scores;
  for (auto& s : squared) s = s * s;
  for (auto& s : affine) s = 0.25f * s + 0.1f;
  CHECK(average_precision(make_frames(squared, labels)) == base);
  CHECK(average_precision(make_frames(affine, labels)) == base);
}

TEST_CASE("ties break deterministically by clip and frame") {
  std::vector<ScoredFrame> frames = make_frames({0.5f, 0.5f, 0.5f}, {0, 1, 0});
  const double a = average_precision(frames);
  std::reverse(frames.begin(), frames.end());
  CHECK(average_precision(frames) == a);
}

TEST_CASE("f1 matches the closed forms") {
  // TP=2, FP=1, FN=1
  const double f1 = f1_score(make_frames({0.9f, 0.8f, 0.7f, 0.2f}, {1, 1, 0, 1}));
  CHECK(f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(f1_score(make_frames({0.9f, 0.1f}, {1, 0})) == 1.0);
  CHECK(f1_score(make_frames({0.1f, 0.2f}, {0, 0})) == 0.0);
}

TEST_CASE("f1 agrees with a confusion-matrix oracle on random cases") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> scores(20);
    std::vector<int> labels(20);
    for (auto& s : scores) s = rng.uniform();
    for (auto& l : labels) l = rng.uniform() < 0.5f ? 1 : 0;
    auto frames = make_frames(scores, labels);

    std::int64_t tp = 0, fp = 0, fn = 0;
    for (const auto& f : frames) {
      const bool pred = f.score >= 0.5f;
      tp += pred && f.label == 1;
      fp += pred && f.label == 0;
      fn += !pred && f.label == 1;
    }
    const double expect = (2 * tp + fp + fn) == 0
                              ? 0.0
                              : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    CHECK(f1_score(frames) == expect);
  }
}

TEST_CASE("f1 is stable under non-crossing score perturbations") {
  auto frames = make_frames({0.9f, 0.6f, 0.4f, 0.1f}, {1, 0, 1, 0});
  const double base = f1_score(frames);
  for (auto& f : frames) f.score += f.score >= 0.5f ? 0.05f : -0.05f;
  CHECK(f1_score(frames) == base);
}

TEST_CASE("face-size breakdown buckets by width") {
  std::vector<ScoredFrame> frames;
  for (int w : {100, 100, 100}) {
    ScoredFrame f;
    f.clip_id = "c";
    f.frame_index = static_cast<int>(frames.size());
    f.score = 0.8f;
    f.label = 1;
    f.face_width_px = w;
    frames.push_back(f);
  }
  auto rows = breakdown(frames, Facet::kFaceSize);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].bucket == "middle");
  CHECK(rows[0].count == 3);

  std::vector<ScoredFrame> spread;
  int idx = 0;
  for (int w : {32, 100, 200}) {
    ScoredFrame f;
    f.clip_id = "c";
    f.frame_index = idx++;
    f.score = 0.8f;
    f.label = 1;
    f.face_width_px = w;
    spread.push_back(f);
  }
  auto rows2 = breakdown(spread, Facet::kFaceSize);
  REQUIRE(rows2.size() == 3);
  for (const auto& r : rows2) CHECK(r.count == 1);
}

TEST_CASE("degraded small faces rank below large ones in the breakdown") {
  Rng rng(6);
  std::vector<ScoredFrame> frames;
  for (int i = 0; i < 200; ++i) {
    ScoredFrame f;
    f.clip_id = "c" + std::to_string(i);
    f.frame_index = 0;
    f.label = i % 2;
    const bool small = i < 100;
    f.face_width_px = small ? 40 : 160;
    // large faces scored almost perfectly, small faces noisy
    const float clean = f.label == 1 ? 0.9f : 0.1f;
    f.score = small ? 0.5f * clean + 0.5f * rng.uniform() : clean + 0.01f * rng.uniform();
    frames.push_back(f);
  }
  auto rows = breakdown(frames, Facet::kFaceSize);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].bucket == "small");
  CHECK(rows[1].bucket == "large");
  CHECK(rows[0].ap < rows[1].ap);
}

TEST_CASE("n-faces breakdown and metrics report") {
  std::vector<ScoredFrame> frames;
  for (int i = 0; i < 30; ++i) {
    ScoredFrame f;
    f.clip_id = "c";
    f.frame_index = i;
    f.label = i % 2;
    f.score = f.label ? 0.8f : 0.3f;
    f.face_width_px = 100;
    f.n_faces = 1 + i % 3;
    frames.push_back(f);
  }
  auto rows = breakdown(frames, Facet::kNFaces);
  REQUIRE(rows.size() == 3);
  const std::string report = metrics_report_json(frames);
  CHECK(report.find("\"map\"") != std::string::npos);
  CHECK(report.find("\"f1\"") != std::string::npos);
  CHECK(report.find("\"face_size\"") != std::string::npos);
  CHECK(report.find("\"n_faces\"") != std::string::npos);
}

TEST_CASE("score csv round trips") {
  auto frames = make_frames({0.25f, 0.75f}, {0, 1});
  const std::string path = (std::filesystem::temp_directory_path() / "asdkit_scores.csv").string();
  write_scores_csv(frames, path);
  auto back = read_scores_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].clip_id == "c");
  CHECK(back[0].frame_index == 0);
  CHECK(back[0].score == doctest::Approx(0.25));
  CHECK(back[1].label == 1);
  std::remove(path.c_str());
}
