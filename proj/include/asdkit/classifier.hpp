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

#include <vector>

#include "asdkit/nn.hpp"

namespace asdkit {

inline constexpr real kProbClamp = real(1e-7);

// Fully connected layer + per-frame softmax over {not speaking, speaking}.
class Classifier {
 public:
  Classifier(int in_dim, Rng& rng);

  void reg(nn::ParamSet& ps, const std::string& prefix);

  // [T,in] -> per-frame class logits [T,2]; column 1 is speaking.
  nn::Var forward_logits(nn::Graph& g, nn::Var joint);

  // [T,in] -> per-frame class probabilities [T,2]
  nn::Var forward_probs(nn::Graph& g, nn::Var joint);

  // speaking-probability sequence [T]
  static nn::Var scores_from_probs(nn::Graph& g, nn::Var probs);

  // In-graph frame-level cross-entropy on the logits. The value clamps the
  // probabilities to [1e-7, 1-1e-7] before the logs; the gradient takes the
  // log-softmax route so saturated frames keep a restoring signal. mask
  // (optional) zeroes padded frames out of the average.
  static nn::Var loss_from_logits(nn::Graph& g, nn::Var logits, const std::vector<int>& labels,
                                  const std::vector<int>* mask = nullptr);

 private:
  nn::Linear head_;
};

// Frame-level cross-entropy on plain values:
//   loss = -1/T sum_i [ y_i log s_i + (1-y_i) log(1-s_i) ]
// with s clamped to [1e-7, 1-1e-7] before the logs.
double frame_cross_entropy(const std::vector<real>& scores, const std::vector<int>& labels);

}  // namespace asdkit
