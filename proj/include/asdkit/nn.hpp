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

#include <string>
#include <utility>
#include <vector>

#include "asdkit/graph.hpp"

namespace asdkit::nn {

using ag::Graph;
using ag::Parameter;
using ag::Var;

// Flat registry of a model's parameters and stat buffers, in a fixed
// construction order. Checkpointing and the optimizer both key off it.
struct ParamSet {
  std::vector<Parameter*> params;
  std::vector<std::pair<std::string, Tensor*>> buffers;

  void add(Parameter& p, std::string name) {
    p.name = std::move(name);
    params.push_back(&p);
  }
  void add_buffer(std::string name, Tensor& t) { buffers.emplace_back(std::move(name), &t); }
  void zero_grads() {
    for (Parameter* p : params) p->zero_grad();
  }
  std::int64_t count() const {
    std::int64_t n = 0;
    for (const Parameter* p : params) n += p->value.numel();
    return n;
  }
};

// Kaiming-uniform over fan_in; biases, norm offsets stay zero.
void kaiming_uniform(Tensor& w, int fan_in, Rng& rng);

// Checkpoint directory: one TNSR1 file per parameter/buffer plus the caller's
// meta.json. Loading requires exact shape agreement.
void save_param_set(const ParamSet& ps, const std::string& dir);
void load_param_set(ParamSet& ps, const std::string& dir);

// ---- layers -----------------------------------------------------------------

struct Linear {
  Parameter weight, bias;
  bool has_bias = true;

  void init(int in_dim, int out_dim, Rng& rng, bool use_bias = true);
  void reg(ParamSet& ps, const std::string& prefix);
  Var forward(Graph& g, Var x);
};

struct Conv1d {
  Parameter weight, bias;
  ag::Conv1dArgs args;
  bool has_bias = true;

  void init(int in_ch, int out_ch, int kernel, const ag::Conv1dArgs& a, Rng& rng,
            bool use_bias = true);
  void reg(ParamSet& ps, const std::string& prefix);
  Var forward(Graph& g, Var x);
};

struct Conv2d {
  Parameter weight, bias;
  ag::Conv2dArgs args;
  bool has_bias = true;

  void init(int in_ch, int out_ch, int kh, int kw, const ag::Conv2dArgs& a, Rng& rng,
            bool use_bias = true);
  void reg(ParamSet& ps, const std::string& prefix);
  Var forward(Graph& g, Var x);
};

struct Conv3d {
  Parameter weight, bias;
  ag::Conv3dArgs args;
  bool has_bias = true;

  void init(int in_ch, int out_ch, int kd, int kh, int kw, const ag::Conv3dArgs& a, Rng& rng,
            bool use_bias = true);
  void reg(ParamSet& ps, const std::string& prefix);
  Var forward(Graph& g, Var x);
};

struct BatchNorm {
  Parameter gamma, beta;
  Tensor running_mean, running_var;
  real momentum = real(0.1);
  real eps = real(1e-5);
  int channel_axis = 0;

  void init(int channels, int axis);
  void reg(ParamSet& ps, const std::string& prefix);
  Var forward(Graph& g, Var x, bool training);
};

struct LayerNorm {
  Parameter gamma, beta;
  real eps = real(1e-5);

  void init(int dim);
  void reg(ParamSet& ps, const std::string& prefix);
  Var forward(Graph& g, Var x);
};

// Squeeze-and-excitation channel gate over x[C,H,W]: global average pool,
// bottleneck C -> C/r -> C, sigmoid, channel-wise rescale.
struct SqueezeExcite {
  Linear fc1, fc2;
  int channels = 0;
  int reduction = 16;

  void init(int ch, int red, Rng& rng);
  void reg(ParamSet& ps, const std::string& prefix);
  Var forward(Graph& g, Var x);
};

// One pre-projection multi-head scaled dot-product attention layer.
// query stream [T,D] attends over source stream [S,D]; D split across heads.
struct MultiHeadAttention {
  Linear wq, wk, wv, wo;
  int heads = 8;
  int model_dim = 0;

  void init(int dim, int n_heads, Rng& rng);
  void reg(ParamSet& ps, const std::string& prefix);
  Var forward(Graph& g, Var query_in, Var source_in);
};

// Attention layer + feed-forward, each with residual connection and layer
// normalization; the residual stream is the query/target side.
struct TransformerBlock {
  MultiHeadAttention attn;
  Linear ff1, ff2;
  LayerNorm ln1, ln2;

  void init(int dim, int n_heads, int ff_mult, Rng& rng);
  void reg(ParamSet& ps, const std::string& prefix);
  Var forward(Graph& g, Var target, Var source);
};

// Scaled dot-product attention over full [T,d] projections; exposed for the
// single-head case and for direct formula tests.
Var scaled_dot_attention(Graph& g, Var q, Var k, Var v);

}  // namespace asdkit::nn
