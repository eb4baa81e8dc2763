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

#include "asdkit/common.hpp"

namespace asdkit {

// One convolutional layer as seen along its temporal axis.
struct LayerSpec {
  int kernel_size = 1;
  int stride = 1;
  int dilation = 1;
  int padding = 0;  // used only by affected_interval, not by the RF sum
  int axis = 0;     // which input dimension is temporal (bookkeeping only)
};

// Analytic receptive field of a stack ordered input -> output:
//   RF = 1 + sum_i (K_i - 1) * d_i * J_i,  J_i = product of earlier strides.
// An empty stack has RF 1.
int compute_receptive_field(const std::vector<LayerSpec>& specs);

// Interval arithmetic companion to the RF formula: given input positions
// [lo,hi] touched in a length-`in_len` sequence, returns the output index
// range that can change, accounting for per-layer zero padding. Used by the
// perturbation tests to predict empirical support including edge effects.
struct IndexRange {
  int lo = 0;
  int hi = -1;  // empty when hi < lo
  bool empty() const { return hi < lo; }
};
IndexRange affected_interval(const std::vector<LayerSpec>& specs, int in_len, int lo, int hi);

// Output length of the stack for a given input length.
int stack_out_len(const std::vector<LayerSpec>& specs, int in_len);

}  // namespace asdkit
