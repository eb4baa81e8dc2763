#include <cmath>
#include <memory>

#include "asdkit/classifier.hpp"
#include "asdkit/grad_check.hpp"
#include "doctest.h"

using namespace asdkit;
using namespace asdkit::nn;

TEST_CASE("zeroed head predicts 0.5 everywhere") {
  Rng rng(1);
  Classifier clf(256, rng);
  ParamSet ps;
  clf.reg(ps, "clf");
  for (Parameter* p : ps.params) p->value.fill(0);

  Graph g;
  Var joint = g.leaf(Tensor::uniform({4, 256}, -1, 1, rng));
  Var probs = clf.forward_probs(g, joint);
  Var s = Classifier::scores_from_probs(g, probs);
  CHECK(g.val(s).shape == std::vector<int>{4});
  for (real v : g.val(s).data) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("logit gap ln 3 gives score 0.75") {
  Rng rng(2);
  Classifier clf(8, rng);
  ParamSet ps;
  clf.reg(ps, "clf");
  for (Parameter* p : ps.params) p->value.fill(0);
  // bias = (0, ln 3)
  ps.params[1]->value.data[1] = std::log(3.0f);

  Graph g;
  Var joint = g.leaf(Tensor::zeros({3, 8}));
  Var s = Classifier::scores_from_probs(g, clf.forward_probs(g, joint));
  for (real v : g.val(s).data) CHECK(v == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("frame cross entropy reproduces closed forms") {
  // perfect prediction: loss collapses to the clamp floor effect
  CHECK(frame_cross_entropy({1.0f, 0.0f}, {1, 0}) <= 1e-6 * std::fabs(std::log(1e-7)) + 1e-9);

  // uninformative s == 0.5 gives ln 2 for any labels
  CHECK(frame_cross_entropy({0.5f, 0.5f, 0.5f}, {1, 0, 1}) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK(frame_cross_entropy({0.5f}, {0}) == doctest::Approx(std::log(2.0)).epsilon(1e-9));

  // worked case: -(log 0.9 + log 0.8)/2
  const double expect = -(std::log(0.9) + std::log(0.8)) / 2.0;
  CHECK(frame_cross_entropy({0.9f, 0.2f}, {1, 0}) == doctest::Approx(expect).epsilon(1e-6));
  CHECK(expect == doctest::Approx(0.1643).epsilon(1e-3));

  CHECK_THROWS_AS(frame_cross_entropy({0.5f}, {1, 0}), InvalidArgument);
  CHECK_THROWS_AS(frame_cross_entropy({0.5f}, {2}), InvalidArgument);
}

TEST_CASE("in-graph loss agrees with the plain evaluation") {
  Rng rng(3);
  Graph g;
  Tensor logits({3, 2});
  const std::vector<real> s = {0.9f, 0.2f, 0.61f};
  for (int i = 0; i < 3; ++i) {
    // logit pair whose softmax hits the requested speaking probability
    logits.at(i, 0) = 0.0f;
    logits.at(i, 1) = std::log(s[static_cast<std::size_t>(i)] / (1.0f - s[static_cast<std::size_t>(i)]));
  }
  const std::vector<int> y = {1, 0, 1};
  Var loss = Classifier::loss_from_logits(g, g.leaf(logits), y);
  CHECK(g.val(loss).data[0] == doctest::Approx(frame_cross_entropy(s, y)).epsilon(1e-5));

  // masked frames drop out of the average
  const std::vector<int> mask = {1, 1, 0};
  Var masked = Classifier::loss_from_logits(g, g.leaf(logits), y, &mask);
  CHECK(g.val(masked).data[0] ==
        doctest::Approx(frame_cross_entropy({0.9f, 0.2f}, {1, 0})).epsilon(1e-5));
}

TEST_CASE("loss keeps a restoring gradient past float saturation") {
  Graph g;
  Tensor logits({1, 2});
  logits.at(0, 0) = 40.0f;  // softmax underflows class 1 to exact zero
  logits.at(0, 1) = -40.0f;
  Var lv = g.leaf(logits, true);
  Var loss = Classifier::loss_from_logits(g, lv, {1});
  CHECK(g.val(loss).data[0] == doctest::Approx(-std::log(1e-7)).epsilon(1e-4));
  g.backward(loss);
  CHECK(g.grad(lv).at(0, 0) == doctest::Approx(1.0));
  CHECK(g.grad(lv).at(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("prediction is frame-local") {
  Rng rng(4);
  Classifier clf(16, rng);
  Tensor joint = Tensor::uniform({5, 16}, -1, 1, rng);
  Graph g0;
  const Tensor s0 = g0.val(Classifier::scores_from_probs(g0, clf.forward_probs(g0, g0.leaf(joint))));
  Tensor poked = joint;
  for (int j = 0; j < 16; ++j) poked.at(2, j) += 0.3f;
  Graph g1;
  const Tensor s1 = g1.val(Classifier::scores_from_probs(g1, clf.forward_probs(g1, g1.leaf(poked))));
  for (int i = 0; i < 5; ++i) {
    if (i == 2) {
      CHECK(s1.data[static_cast<std::size_t>(i)] != s0.data[static_cast<std::size_t>(i)]);
    } else {
      CHECK(s1.data[static_cast<std::size_t>(i)] == s0.data[static_cast<std::size_t>(i)]);
    }
  }
}

TEST_CASE("loss gradient through predict matches finite differences") {
  Rng rng(5);
  auto clf = std::make_shared<Classifier>(8, rng);
  Tensor joint = Tensor::uniform({4, 8}, -1, 1, rng);
  const std::vector<int> y = {1, 0, 0, 1};
  const double err = grad_check(
      [clf, &y](Graph& g, const std::vector<Var>& in) {
        return Classifier::loss_from_logits(g, clf->forward_logits(g, in[0]), y);
      },
      {joint}, 0.01f, 0.05);
  CHECK(err < 1e-2);
}
