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
#include "asdkit/grad_suite.hpp"

#include <memory>
#include <thread>

#include "asdkit/attention.hpp"
#include "asdkit/classifier.hpp"

namespace asdkit {

using namespace ag;

namespace {

constexpr real kEpsLinear = 0.05f;   // multilinear ops: central differences are exact
constexpr real kEpsCurved = 0.01f;
constexpr double kFloor = 0.05;      // float32 noise guard at unit gradient scale

Var weighted_sum(Graph& g, Var y, unsigned seed) {
  Rng rng(seed);
  Tensor w = Tensor::uniform(g.val(y).shape, 0.5f, 1.5f, rng);
  return sum_all(g, mul(g, y, g.leaf(w)));
}

}  // namespace

std::vector<GradCheckEntry> run_grad_check_suite(int seeds, int workers) {
  check_arg(seeds >= 1, "grad suite: need at least one seed");
  std::vector<std::vector<GradCheckEntry>> per_seed(static_cast<std::size_t>(seeds));

  auto run_seed = [&](int seed) {
    std::vector<GradCheckEntry>& local = per_seed[static_cast<std::size_t>(seed)];
    auto record = [&](const std::string& name, double err) {
      for (auto& e : local) {
        if (e.name == name) {
          e.max_rel_error = std::max(e.max_rel_error, err);
          return;
        }
      }
      local.push_back({name, err});
    };

    Rng rng(5000 + static_cast<unsigned>(seed));
    const Tensor a = Tensor::uniform({3, 4}, -1, 1, rng);
    const Tensor b = Tensor::uniform({3, 4}, -1, 1, rng);

    record("add", grad_check([&](Graph& g, const std::vector<Var>& in) {
             return weighted_sum(g, add(g, in[0], in[1]), static_cast<unsigned>(seed));
           },
           {a, b}, kEpsLinear, kFloor));
    record("mul", grad_check([&](Graph& g, const std::vector<Var>& in) {
             return weighted_sum(g, mul(g, in[0], in[1]), static_cast<unsigned>(seed));
           },
           {a, b}, kEpsLinear, kFloor));
    record("sigmoid", grad_check([&](Graph& g, const std::vector<Var>& in) {
             return weighted_sum(g, sigmoid(g, in[0]), static_cast<unsigned>(seed));
           },
           {a}, kEpsCurved, kFloor));

    Tensor away_from_kink = Tensor::uniform({3, 4}, 0.15f, 1.0f, rng);
    for (std::size_t i = 0; i < away_from_kink.data.size(); i += 2) {
      away_from_kink.data[i] = -away_from_kink.data[i];
    }
    record("relu", grad_check([&](Graph& g, const std::vector<Var>& in) {
             return weighted_sum(g, relu(g, in[0]), static_cast<unsigned>(seed));
           },
           {away_from_kink}, kEpsCurved, kFloor));

    const Tensor pos = Tensor::uniform({3, 4}, 0.2f, 2.0f, rng);
    record("log", grad_check([&](Graph& g, const std::vector<Var>& in) {
             return weighted_sum(g, log_op(g, in[0]), static_cast<unsigned>(seed));
           },
           {pos}, kEpsCurved, kFloor));

    const Tensor x = Tensor::uniform({4, 4}, -1, 1, rng);
    const Tensor w = Tensor::uniform({4, 4}, -1, 1, rng);
    const Tensor bias = Tensor::uniform({4}, -1, 1, rng);
    record("linear", grad_check([&](Graph& g, const std::vector<Var>& in) {
             return weighted_sum(g, linear(g, in[0], in[1], in[2]), static_cast<unsigned>(seed));
           },
           {x, w, bias}, kEpsLinear, kFloor));
    record("matmul", grad_check([&](Graph& g, const std::vector<Var>& in) {
             return weighted_sum(g, matmul(g, in[0], in[1]), static_cast<unsigned>(seed));
           },
           {x, w}, kEpsLinear, kFloor));
    record("softmax", grad_check([&](Graph& g, const std::vector<Var>& in) {
             return weighted_sum(g, softmax(g, in[0], 1), static_cast<unsigned>(seed));
           },
           {a}, kEpsCurved, kFloor));

    const Tensor x1 = Tensor::uniform({2, 8}, -1, 1, rng);
    const Tensor w1 = Tensor::uniform({2, 1, 3}, -1, 1, rng);
    record("conv1d", grad_check([&](Graph& g, const std::vector<Var>& in) {
             Conv1dArgs args;
             args.padding = 1;
             args.groups = 2;
             return weighted_sum(g, conv1d(g, in[0], in[1], Var{}, args), static_cast<unsigned>(seed));
           },
           {x1, w1}, kEpsLinear, kFloor));

    const Tensor x2 = Tensor::uniform({2, 2, 5, 5}, -1, 1, rng);
    const Tensor w2 = Tensor::uniform({3, 2, 3, 3}, -1, 1, rng);
    record("conv2d", grad_check([&](Graph& g, const std::vector<Var>& in) {
             Conv2dArgs args;
             args.stride_h = 2;
             args.pad_h = 1;
             args.pad_w = 1;
             return weighted_sum(g, conv2d(g, in[0], in[1], Var{}, args), static_cast<unsigned>(seed));
           },
           {x2, w2}, kEpsLinear, kFloor));

    const Tensor x3 = Tensor::uniform({1, 4, 3, 3}, -1, 1, rng);
    const Tensor w3 = Tensor::uniform({2, 1, 3, 2, 2}, -1, 1, rng);
    record("conv3d", grad_check([&](Graph& g, const std::vector<Var>& in) {
             Conv3dArgs args;
             args.pad_d = 1;
             return weighted_sum(g, conv3d(g, in[0], in[1], Var{}, args), static_cast<unsigned>(seed));
           },
           {x3, w3}, kEpsLinear, kFloor));

    const Tensor bx = Tensor::uniform({3, 6}, -1, 1, rng);
    const Tensor bg = Tensor::uniform({3}, 0.5f, 1.5f, rng);
    const Tensor bb = Tensor::uniform({3}, -0.5f, 0.5f, rng);
    record("batch_norm", grad_check([&](Graph& g, const std::vector<Var>& in) {
             Tensor rm({3}), rv = Tensor::full({3}, 1.0f);
             BatchNormArgs args;
             args.training = true;
             return weighted_sum(g, batch_norm(g, in[0], in[1], in[2], rm, rv, args),
                                 static_cast<unsigned>(seed));
           },
           {bx, bg, bb}, kEpsCurved, kFloor));

    const Tensor lx = Tensor::uniform({4, 6}, -1, 1, rng);
    const Tensor lg = Tensor::uniform({6}, 0.5f, 1.5f, rng);
    const Tensor lb = Tensor::uniform({6}, -0.5f, 0.5f, rng);
    record("layer_norm", grad_check([&](Graph& g, const std::vector<Var>& in) {
             return weighted_sum(g, layer_norm(g, in[0], in[1], in[2]), static_cast<unsigned>(seed));
           },
           {lx, lg, lb}, kEpsCurved, kFloor));

    // composed fusion + classifier path on a short sequence. The readout is
    // a smooth weighted mean of the class probabilities: the cross-entropy
    // value and gradient have their own closed-form and unit checks, and its
    // log curvature would swamp a float32 difference quotient here.
    const int t = 2 + seed % 3;  // T <= 6
    Rng model_rng(900 + static_cast<unsigned>(seed));
    auto fusion = std::make_shared<AttentionFusion>(FusionConfig{}, model_rng);
    auto clf = std::make_shared<Classifier>(256, model_rng);
    const Tensor fa = Tensor::uniform({t, 128}, -0.5f, 0.5f, rng);
    const Tensor fv = Tensor::uniform({t, 128}, -0.5f, 0.5f, rng);
    record("fusion+classifier", grad_check([&](Graph& g, const std::vector<Var>& in) {
             Var joint = fusion->forward(g, in[0], in[1]);
             Var probs = clf->forward_probs(g, joint);
             Rng wr(55);
             Tensor w = Tensor::uniform(g.val(probs).shape, -1.0f, 1.0f, wr);
             return mean_all(g, mul(g, probs, g.leaf(w)));
           },
           {fa, fv}, real(1e-3), kFloor));
  };

  const int w = std::max(1, std::min(workers, seeds));
  if (w == 1) {
    for (int seed = 0; seed < seeds; ++seed) run_seed(seed);
  } else {
    std::vector<std::thread> threads;
    for (int wi = 0; wi < w; ++wi) {
      threads.emplace_back([&, wi] {
        for (int seed = wi; seed < seeds; seed += w) run_seed(seed);
      });
    }
    for (auto& t : threads) t.join();
  }

  std::vector<GradCheckEntry> out;
  for (const auto& results : per_seed) {
    for (const auto& e : results) {
      bool found = false;
      for (auto& o : out) {
        if (o.name == e.name) {
          o.max_rel_error = std::max(o.max_rel_error, e.max_rel_error);
          found = true;
        }
      }
      if (!found) out.push_back(e);
    }
  }
  return out;
}

}  // namespace asdkit
