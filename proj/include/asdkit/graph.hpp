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

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "asdkit/tensor.hpp"

namespace asdkit::ag {

// A named, persistent weight tensor. Graphs bind leaves to parameters and
// accumulate gradients back into `grad` after backward().
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() {
    if (grad.shape != value.shape) grad = Tensor::zeros(value.shape);
    grad.fill(0);
  }
};

// Handle to a node in one Graph. Cheap to copy; only meaningful together
// with the graph that produced it.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Tape-style operation graph built eagerly by the op functions below.
// Insertion order is a topological order (every input of a node precedes
// it), so backward() is a single reverse scan that touches each node once.
// Single-threaded per instance; independent graphs may live on independent
// threads.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  struct Node {
    Tensor value;
    Tensor grad;  // empty until the node receives a contribution in backward
    std::vector<int> parents;
    std::function<void(Graph&, int)> backward_fn;  // nullptr for leaves
    const char* op = "leaf";
    bool needs_grad = false;
    Parameter* bound_param = nullptr;
  };

  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var param(Parameter& p);

  Var make(Tensor value, std::vector<int> parents, const char* op,
           std::function<void(Graph&, int)> backward_fn);

  const Tensor& val(Var v) const { return val_of(v.id); }
  const Tensor& grad(Var v) const;

  // Computes dLoss/dNode for every node on a path from a requires_grad leaf
  // to `loss`. `loss` must be scalar. Deterministic: a fixed graph and
  // inputs always produce bit-identical gradients.
  void backward(Var loss);

  // Adds each parameter-bound leaf's gradient into Parameter::grad.
  void accumulate_param_grads();

  // Batch-norm running-stat updates computed during training forwards are
  // queued here instead of applied in place, so multi-threaded per-clip
  // graphs stay race-free; the trainer drains queues in deterministic order.
  struct PendingBnUpdate {
    Tensor* running_mean;
    Tensor* running_var;
    Tensor batch_mean;
    Tensor batch_var;
    real momentum;
  };
  std::vector<PendingBnUpdate> pending_bn;
  void apply_pending_bn();

  int size() const { return static_cast<int>(nodes_.size()); }
  const Tensor& val_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  Tensor& grad_of(int id);  // zero-allocates on first touch
  bool needs(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }

  // Toggle the per-op non-finite output check (on by default).
  bool check_finite = true;

 private:
  std::deque<Node> nodes_;
};

// ---- elementwise & shape ops -------------------------------------------
Var add(Graph& g, Var a, Var b);
Var sub(Graph& g, Var a, Var b);
Var mul(Graph& g, Var a, Var b);
Var scale(Graph& g, Var a, real c);
Var add_scalar(Graph& g, Var a, real c);
Var relu(Graph& g, Var a);
Var sigmoid(Graph& g, Var a);
Var log_op(Graph& g, Var a);
Var clamp(Graph& g, Var a, real lo, real hi);
Var reshape(Graph& g, Var a, std::vector<int> shape);
Var transpose(Graph& g, Var a);                       // 2-D
Var swap_first2(Graph& g, Var a);                     // [A,B,rest] -> [B,A,rest]
Var concat_cols(Graph& g, Var a, Var b);              // [T,Da]+[T,Db] -> [T,Da+Db]
Var slice_cols(Graph& g, Var a, int from, int to);    // [T,D] -> [T,to-from]
Var slice_rows(Graph& g, Var a, int from, int to);    // [T,D] -> [to-from,D]

// ---- reductions ----------------------------------------------------------
Var sum_all(Graph& g, Var a);    // -> [1]
Var mean_all(Graph& g, Var a);   // -> [1]
Var mean_last(Graph& g, Var a);  // mean over the last axis
Var mean_last2(Graph& g, Var a); // mean over the last two axes (spatial GAP)

// ---- linear algebra -------------------------------------------------------
Var matmul(Graph& g, Var a, Var b);                    // [m,k]x[k,n]
Var linear(Graph& g, Var x, Var w, Var b);             // [T,in]x[out,in]^T+b
Var softmax(Graph& g, Var a, int axis);
Var channel_scale(Graph& g, Var x, Var s);             // x[C,...] * s[C]

// ---- convolutions ---------------------------------------------------------
struct Conv1dArgs {
  int stride = 1;
  int dilation = 1;
  int padding = 0;
  int groups = 1;
};
struct Conv2dArgs {
  int stride_h = 1, stride_w = 1;
  int dil_h = 1, dil_w = 1;
  int pad_h = 0, pad_w = 0;
};
struct Conv3dArgs {
  int stride_d = 1, stride_h = 1, stride_w = 1;
  int pad_d = 0, pad_h = 0, pad_w = 0;
};

// x[Cin,L], w[Cout,Cin/groups,K] -> [Cout,Lout]; cross-correlation.
Var conv1d(Graph& g, Var x, Var w, Var bias, const Conv1dArgs& args);
// x[N,Cin,H,W], w[Cout,Cin,KH,KW] -> [N,Cout,OH,OW]
Var conv2d(Graph& g, Var x, Var w, Var bias, const Conv2dArgs& args);
// x[Cin,D,H,W], w[Cout,Cin,KD,KH,KW] -> [Cout,OD,OH,OW]
Var conv3d(Graph& g, Var x, Var w, Var bias, const Conv3dArgs& args);

int conv_out_len(int in_len, int kernel, int stride, int dilation, int padding);

// ---- normalization --------------------------------------------------------
struct BatchNormArgs {
  real momentum = real(0.1);
  real eps = real(1e-5);
  int channel_axis = 0;
  bool training = false;
};
// Training mode normalizes by the statistics of this call's input and queues
// a running-stat update on the graph; eval mode normalizes by running stats.
Var batch_norm(Graph& g, Var x, Var gamma, Var beta, Tensor& running_mean, Tensor& running_var,
               const BatchNormArgs& args);

Var layer_norm(Graph& g, Var x, Var gamma, Var beta, real eps = real(1e-5));

// Per-row softmax + cross-entropy against integer class labels, averaged
// over unmasked rows. The value clamps probabilities to [clamp_p, 1-clamp_p]
// before the logs; the gradient is the log-softmax form (p - onehot), which
// keeps pushing back even where float32 softmax saturates past the clamp.
Var softmax_xent(Graph& g, Var logits, const std::vector<int>& labels,
                 const std::vector<int>* mask = nullptr, real clamp_p = real(1e-7));

}  // namespace asdkit::ag
