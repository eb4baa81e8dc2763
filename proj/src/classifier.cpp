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
#include "asdkit/classifier.hpp"

#include <cmath>

namespace asdkit {

using namespace nn;

Classifier::Classifier(int in_dim, Rng& rng) { head_.init(in_dim, 2, rng); }

void Classifier::reg(ParamSet& ps, const std::string& prefix) { head_.reg(ps, prefix + ".head"); }

Var Classifier::forward_logits(Graph& g, Var joint) { return head_.forward(g, joint); }

Var Classifier::forward_probs(Graph& g, Var joint) {
  return ag::softmax(g, forward_logits(g, joint), 1);
}

Var Classifier::scores_from_probs(Graph& g, Var probs) {
  const int t = g.val(probs).shape[0];
  return ag::reshape(g, ag::slice_cols(g, probs, 1, 2), {t});
}

Var Classifier::loss_from_logits(Graph& g, Var logits, const std::vector<int>& labels,
                                 const std::vector<int>* mask) {
  const Tensor& lv = g.val(logits);
  check_arg(lv.ndim() == 2 && lv.shape[1] == 2, "loss: expects [T,2] logits");
  for (int y : labels) check_arg(y == 0 || y == 1, "loss: labels must be binary");
  return ag::softmax_xent(g, logits, labels, mask, kProbClamp);
}

double frame_cross_entropy(const std::vector<real>& scores, const std::vector<int>& labels) {
  check_arg(scores.size() == labels.size(), "frame_cross_entropy: length mismatch");
  check_arg(!scores.empty(), "frame_cross_entropy: empty sequence");
  double acc = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = std::min<double>(1.0 - kProbClamp, std::max<double>(kProbClamp, scores[i]));
    const int y = labels[i];
    check_arg(y == 0 || y == 1, "frame_cross_entropy: labels must be binary");
    acc += y == 1 ? std::log(s) : std::log(1.0 - s);
  }
  return -acc / static_cast<double>(scores.size());
}

}  // namespace asdkit
