#include <cmath>

#include "asdkit/graph.hpp"
#include "asdkit/receptive_field.hpp"
#include "doctest.h"

using namespace asdkit;

TEST_CASE("receptive field arithmetic") {
  CHECK(compute_receptive_field({}) == 1);
  CHECK(compute_receptive_field({{3, 1, 1}}) == 3);
  // stride raises the jump of later layers
  CHECK(compute_receptive_field({{3, 2, 1}, {3, 1, 1}}) == 7);
  // dilation widens a single layer
  CHECK(compute_receptive_field({{3, 1, 4}}) == 9);
}

TEST_CASE("analytic receptive field equals empirical perturbation support") {
  // Random conv1d stack; perturb one input frame and compare the changed
  // output set against the interval predicted from the LayerSpecs.
  Rng rng(55);
  const std::vector<LayerSpec> specs = {
      {5, 1, 1, 2}, {3, 2, 1, 1}, {3, 1, 2, 2}, {7, 1, 1, 3}};
  const int channels = 3, len = 64;

  std::vector<Tensor> weights;
  for (const LayerSpec& s : specs) {
    weights.push_back(Tensor::uniform({channels, channels, s.kernel_size}, -0.4f, 0.4f, rng));
  }
  auto forward = [&](const Tensor& x) {
    ag::Graph g;
    ag::Var v = g.leaf(x);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      ag::Conv1dArgs a;
      a.stride = specs[i].stride;
      a.dilation = specs[i].dilation;
      a.padding = specs[i].padding;
      v = ag::conv1d(g, v, g.leaf(weights[i]), ag::Var{}, a);
    }
    return g.val(v);
  };

  Tensor base = Tensor::uniform({channels, len}, -1, 1, rng);
  const Tensor y0 = forward(base);
  const int out_len = stack_out_len(specs, len);
  REQUIRE(y0.shape[1] == out_len);

  const int rf = compute_receptive_field(specs);
  for (int probe : {5, len / 2, len - 3}) {
    Tensor x = base;
    for (int c = 0; c < channels; ++c) x.at(c, probe) += 0.7f;
    const Tensor y1 = forward(x);
    IndexRange expect = affected_interval(specs, len, probe, probe);
    int lo_seen = out_len, hi_seen = -1;
    for (int o = 0; o < out_len; ++o) {
      real diff = 0;
      for (int c = 0; c < channels; ++c) diff += std::fabs(y1.at(c, o) - y0.at(c, o));
      if (diff > 1e-6f) {
        lo_seen = std::min(lo_seen, o);
        hi_seen = std::max(hi_seen, o);
      }
    }
    CHECK(lo_seen == expect.lo);
    CHECK(hi_seen == expect.hi);
    // interior probes: the measured support width is bounded by the RF image
    CHECK(hi_seen - lo_seen + 1 <= rf);
  }
}
