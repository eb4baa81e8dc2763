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
#include "asdkit/nn.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

namespace asdkit::nn {

void kaiming_uniform(Tensor& w, int fan_in, Rng& rng) {
  check_arg(fan_in > 0, "kaiming_uniform: fan_in must be positive");
  const float bound = std::sqrt(6.0f / static_cast<float>(fan_in));
  for (auto& x : w.data) x = rng.uniform(-bound, bound);
}

namespace {

std::string safe_file_name(const std::string& name) {
  std::string s = name;
  for (char& c : s) {
    if (c == '/' || c == ' ') c = '.';
  }
  return s + ".tnsr";
}

}  // namespace

void save_param_set(const ParamSet& ps, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const Parameter* p : ps.params) {
    save_tnsr(p->value, (std::filesystem::path(dir) / safe_file_name(p->name)).string());
  }
  for (const auto& [name, t] : ps.buffers) {
    save_tnsr(*t, (std::filesystem::path(dir) / safe_file_name(name)).string());
  }
}

void load_param_set(ParamSet& ps, const std::string& dir) {
  for (Parameter* p : ps.params) {
    Tensor t = load_tnsr((std::filesystem::path(dir) / safe_file_name(p->name)).string());
    check_arg(t.shape == p->value.shape, "checkpoint shape mismatch for " + p->name);
    p->value = std::move(t);
  }
  for (auto& [name, buf] : ps.buffers) {
    Tensor t = load_tnsr((std::filesystem::path(dir) / safe_file_name(name)).string());
    check_arg(t.shape == buf->shape, "checkpoint shape mismatch for " + name);
    *buf = std::move(t);
  }
}

// ---- Linear -----------------------------------------------------------------

void Linear::init(int in_dim, int out_dim, Rng& rng, bool use_bias) {
  has_bias = use_bias;
  weight.value = Tensor({out_dim, in_dim});
  kaiming_uniform(weight.value, in_dim, rng);
  if (has_bias) bias.value = Tensor::zeros({out_dim});
}

void Linear::reg(ParamSet& ps, const std::string& prefix) {
  ps.add(weight, prefix + ".weight");
  if (has_bias) ps.add(bias, prefix + ".bias");
}

Var Linear::forward(Graph& g, Var x) {
  Var w = g.param(weight);
  Var b = has_bias ? g.param(bias) : Var{};
  return ag::linear(g, x, w, b);
}

// ---- convolutions ------------------------------------------------------------

void Conv1d::init(int in_ch, int out_ch, int kernel, const ag::Conv1dArgs& a, Rng& rng,
                  bool use_bias) {
  args = a;
  has_bias = use_bias;
  weight.value = Tensor({out_ch, in_ch / a.groups, kernel});
  kaiming_uniform(weight.value, (in_ch / a.groups) * kernel, rng);
  if (has_bias) bias.value = Tensor::zeros({out_ch});
}

void Conv1d::reg(ParamSet& ps, const std::string& prefix) {
  ps.add(weight, prefix + ".weight");
  if (has_bias) ps.add(bias, prefix + ".bias");
}

Var Conv1d::forward(Graph& g, Var x) {
  return ag::conv1d(g, x, g.param(weight), has_bias ? g.param(bias) : Var{}, args);
}

void Conv2d::init(int in_ch, int out_ch, int kh, int kw, const ag::Conv2dArgs& a, Rng& rng,
                  bool use_bias) {
  args = a;
  has_bias = use_bias;
  weight.value = Tensor({out_ch, in_ch, kh, kw});
  kaiming_uniform(weight.value, in_ch * kh * kw, rng);
  if (has_bias) bias.value = Tensor::zeros({out_ch});
}

void Conv2d::reg(ParamSet& ps, const std::string& prefix) {
  ps.add(weight, prefix + ".weight");
  if (has_bias) ps.add(bias, prefix + ".bias");
}

Var Conv2d::forward(Graph& g, Var x) {
  return ag::conv2d(g, x, g.param(weight), has_bias ? g.param(bias) : Var{}, args);
}

void Conv3d::init(int in_ch, int out_ch, int kd, int kh, int kw, const ag::Conv3dArgs& a, Rng& rng,
                  bool use_bias) {
  args = a;
  has_bias = use_bias;
  weight.value = Tensor({out_ch, in_ch, kd, kh, kw});
  kaiming_uniform(weight.value, in_ch * kd * kh * kw, rng);
  if (has_bias) bias.value = Tensor::zeros({out_ch});
}

void Conv3d::reg(ParamSet& ps, const std::string& prefix) {
  ps.add(weight, prefix + ".weight");
  if (has_bias) ps.add(bias, prefix + ".bias");
}

Var Conv3d::forward(Graph& g, Var x) {
  return ag::conv3d(g, x, g.param(weight), has_bias ? g.param(bias) : Var{}, args);
}

// ---- normalization -------------------------------------------------------------

void BatchNorm::init(int channels, int axis) {
  channel_axis = axis;
  gamma.value = Tensor::full({channels}, 1.0f);
  beta.value = Tensor::zeros({channels});
  running_mean = Tensor::zeros({channels});
  running_var = Tensor::full({channels}, 1.0f);
}

void BatchNorm::reg(ParamSet& ps, const std::string& prefix) {
  ps.add(gamma, prefix + ".gamma");
  ps.add(beta, prefix + ".beta");
  ps.add_buffer(prefix + ".running_mean", running_mean);
  ps.add_buffer(prefix + ".running_var", running_var);
}

Var BatchNorm::forward(Graph& g, Var x, bool training) {
  ag::BatchNormArgs args;
  args.momentum = momentum;
  args.eps = eps;
  args.channel_axis = channel_axis;
  args.training = training;
  return ag::batch_norm(g, x, g.param(gamma), g.param(beta), running_mean, running_var, args);
}

void LayerNorm::init(int dim) {
  gamma.value = Tensor::full({dim}, 1.0f);
  beta.value = Tensor::zeros({dim});
}

void LayerNorm::reg(ParamSet& ps, const std::string& prefix) {
  ps.add(gamma, prefix + ".gamma");
  ps.add(beta, prefix + ".beta");
}

Var LayerNorm::forward(Graph& g, Var x) {
  return ag::layer_norm(g, x, g.param(gamma), g.param(beta), eps);
}

// ---- squeeze-excite --------------------------------------------------------------

void SqueezeExcite::init(int ch, int red, Rng& rng) {
  check_arg(red >= 1 && ch % red == 0, "squeeze_excite: channels must be divisible by reduction");
  channels = ch;
  reduction = red;
  fc1.init(ch, ch / red, rng);
  fc2.init(ch / red, ch, rng);
  // positive squeeze init: with a non-negative pooled input every gate unit
  // is active from the first step
  const float bound = std::sqrt(6.0f / static_cast<float>(ch));
  for (auto& w : fc1.weight.value.data) w = std::fabs(w) < bound ? std::fabs(w) : bound;
  for (auto& b : fc1.bias.value.data) b = 0.01f;
}

void SqueezeExcite::reg(ParamSet& ps, const std::string& prefix) {
  fc1.reg(ps, prefix + ".fc1");
  fc2.reg(ps, prefix + ".fc2");
}

Var SqueezeExcite::forward(Graph& g, Var x) {
  const Tensor& xv = g.val(x);
  check_arg(xv.ndim() == 3 && xv.shape[0] == channels, "squeeze_excite: expects [C,H,W]");
  Var pooled = ag::reshape(g, ag::mean_last2(g, x), {1, channels});
  Var gate = ag::sigmoid(g, fc2.forward(g, ag::relu(g, fc1.forward(g, pooled))));
  return ag::channel_scale(g, x, ag::reshape(g, gate, {channels}));
}

// ---- attention --------------------------------------------------------------------

Var scaled_dot_attention(Graph& g, Var q, Var k, Var v) {
  const Tensor& qv = g.val(q);
  const Tensor& kv = g.val(k);
  const Tensor& vv = g.val(v);
  check_arg(qv.ndim() == 2 && kv.ndim() == 2 && vv.ndim() == 2, "attention: expects 2-D Q,K,V");
  const int d = qv.shape[1];
  check_arg(d > 0, "attention: zero feature dim");
  check_arg(kv.shape[1] == d && vv.shape[1] == d && kv.shape[0] == vv.shape[0],
            "attention: Q,K,V dims disagree");
  Var scores = ag::scale(g, ag::matmul(g, q, ag::transpose(g, k)),
                         real(1) / std::sqrt(static_cast<real>(d)));
  Var weights = ag::softmax(g, scores, 1);
  return ag::matmul(g, weights, v);
}

void MultiHeadAttention::init(int dim, int n_heads, Rng& rng) {
  check_arg(n_heads >= 1 && dim % n_heads == 0, "attention: model dim must divide across heads");
  model_dim = dim;
  heads = n_heads;
  wq.init(dim, dim, rng);
  wk.init(dim, dim, rng);
  wv.init(dim, dim, rng);
  wo.init(dim, dim, rng);
}

void MultiHeadAttention::reg(ParamSet& ps, const std::string& prefix) {
  wq.reg(ps, prefix + ".wq");
  wk.reg(ps, prefix + ".wk");
  wv.reg(ps, prefix + ".wv");
  wo.reg(ps, prefix + ".wo");
}

Var MultiHeadAttention::forward(Graph& g, Var query_in, Var source_in) {
  check_arg(g.val(query_in).shape[1] == model_dim && g.val(source_in).shape[1] == model_dim,
            "attention: stream dims must equal model dim");
  Var q = wq.forward(g, query_in);
  Var k = wk.forward(g, source_in);
  Var v = wv.forward(g, source_in);
  const int hd = model_dim / heads;
  Var merged{};
  for (int h = 0; h < heads; ++h) {
    Var qh = ag::slice_cols(g, q, h * hd, (h + 1) * hd);
    Var kh = ag::slice_cols(g, k, h * hd, (h + 1) * hd);
    Var vh = ag::slice_cols(g, v, h * hd, (h + 1) * hd);
    Var oh = scaled_dot_attention(g, qh, kh, vh);
    merged = h == 0 ? oh : ag::concat_cols(g, merged, oh);
  }
  return wo.forward(g, merged);
}

void TransformerBlock::init(int dim, int n_heads, int ff_mult, Rng& rng) {
  attn.init(dim, n_heads, rng);
  ff1.init(dim, dim * ff_mult, rng);
  ff2.init(dim * ff_mult, dim, rng);
  ln1.init(dim);
  ln2.init(dim);
}

void TransformerBlock::reg(ParamSet& ps, const std::string& prefix) {
  attn.reg(ps, prefix + ".attn");
  ff1.reg(ps, prefix + ".ff1");
  ff2.reg(ps, prefix + ".ff2");
  ln1.reg(ps, prefix + ".ln1");
  ln2.reg(ps, prefix + ".ln2");
}

Var TransformerBlock::forward(Graph& g, Var target, Var source) {
  Var attended = attn.forward(g, target, source);
  Var x = ln1.forward(g, ag::add(g, target, attended));
  Var ff = ff2.forward(g, ag::relu(g, ff1.forward(g, x)));
  return ln2.forward(g, ag::add(g, x, ff));
}

}  // namespace asdkit::nn
