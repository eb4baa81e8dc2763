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
#include "asdkit/grad_check.hpp"

#include <cmath>

namespace asdkit {

namespace {

double eval_loss(const ScalarFn& fn, const std::vector<Tensor>& inputs) {
  ag::Graph g;
  std::vector<ag::Var> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& t : inputs) leaves.push_back(g.leaf(t, false));
  ag::Var loss = fn(g, leaves);
  check_arg(g.val(loss).numel() == 1, "grad_check: fn must return a scalar");
  return static_cast<double>(g.val(loss).data[0]);
}

}  // namespace

double grad_check(const ScalarFn& fn, const std::vector<Tensor>& inputs, real eps,
                  double rel_floor) {
  check_arg(eps > 0, "grad_check: eps must be positive");
  check_arg(rel_floor > 0, "grad_check: rel_floor must be positive");
  for (const Tensor& t : inputs) check_arg(t.all_finite(), "grad_check: inputs must be finite");

  // Analytic gradients in one backward pass.
  std::vector<Tensor> analytic;
  {
    ag::Graph g;
    std::vector<ag::Var> leaves;
    for (const Tensor& t : inputs) leaves.push_back(g.leaf(t, true));
    ag::Var loss = fn(g, leaves);
    check_arg(g.val(loss).numel() == 1, "grad_check: fn must return a scalar");
    g.backward(loss);
    for (ag::Var v : leaves) {
      Tensor grad = Tensor::zeros(g.val(v).shape);
      // A leaf that never received gradient has zero gradient.
      const ag::Graph::Node& n = g.node(v.id);
      if (!n.grad.data.empty()) grad = n.grad;
      analytic.push_back(std::move(grad));
    }
  }

  double max_rel = 0.0;
  std::vector<Tensor> work = inputs;
  for (std::size_t t = 0; t < work.size(); ++t) {
    for (std::size_t i = 0; i < work[t].data.size(); ++i) {
      const real orig = work[t].data[i];
      work[t].data[i] = orig + eps;
      const double fp = eval_loss(fn, work);
      work[t].data[i] = orig - eps;
      const double fm = eval_loss(fn, work);
      work[t].data[i] = orig;
      const double numeric = (fp - fm) / (2.0 * static_cast<double>(eps));
      const double a = static_cast<double>(analytic[t].data[i]);
      const double denom = std::max({std::fabs(a), std::fabs(numeric), rel_floor});
      max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace asdkit
