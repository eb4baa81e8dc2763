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
#include "asdkit/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "asdkit/gemm.hpp"

namespace asdkit::ag {

namespace {

void axpy(Tensor& dst, const Tensor& src, real a = real(1)) {
  const std::size_t n = src.data.size();
  real* d = dst.ptr();
  const real* s = src.ptr();
  for (std::size_t i = 0; i < n; ++i) d[i] += a * s[i];
}

// Splits `shape` around `axis` into [outer, C, inner] extents.
void axis_split(const std::vector<int>& shape, int axis, std::int64_t& outer, std::int64_t& c,
                std::int64_t& inner) {
  outer = 1;
  inner = 1;
  for (int i = 0; i < axis; ++i) outer *= shape[static_cast<std::size_t>(i)];
  c = shape[static_cast<std::size_t>(axis)];
  for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < shape.size(); ++i) inner *= shape[i];
}

}  // namespace

// ---- Graph ----------------------------------------------------------------

Var Graph::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = requires_grad || n.value.requires_grad;
  n.op = "leaf";
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::param(Parameter& p) {
  Var v = leaf(p.value, true);
  nodes_.back().bound_param = &p;
  nodes_.back().op = "param";
  return v;
}

Var Graph::make(Tensor value, std::vector<int> parents, const char* op,
                std::function<void(Graph&, int)> backward_fn) {
  if (check_finite) ensure_finite(value, op);
  Node n;
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.op = op;
  for (int p : n.parents) {
    check_arg(p >= 0 && p < size(), "op input refers to an unknown node");
    if (nodes_[static_cast<std::size_t>(p)].needs_grad) n.needs_grad = true;
  }
  n.backward_fn = std::move(backward_fn);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Graph::grad(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  check_arg(!n.grad.data.empty(), "gradient not computed for this node");
  return n.grad;
}

Tensor& Graph::grad_of(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.data.empty()) n.grad = Tensor::zeros(n.value.shape);
  return n.grad;
}

void Graph::backward(Var loss) {
  check_arg(loss.valid() && loss.id < size(), "backward: unknown loss node");
  Node& ln = nodes_[static_cast<std::size_t>(loss.id)];
  check_arg(ln.value.numel() == 1, "backward: loss must be scalar");
  if (!ln.needs_grad) return;  // nothing depends on a differentiable leaf

  std::vector<char> visit(static_cast<std::size_t>(size()), 0);
  visit[static_cast<std::size_t>(loss.id)] = 1;
  grad_of(loss.id).fill(1);

  for (int i = loss.id; i >= 0; --i) {
    if (!visit[static_cast<std::size_t>(i)]) continue;
    Node& n = nodes_[static_cast<std::size_t>(i)];
    for (int p : n.parents) visit[static_cast<std::size_t>(p)] = 1;
    if (n.needs_grad && n.backward_fn) n.backward_fn(*this, i);
  }
}

void Graph::accumulate_param_grads() {
  for (auto& n : nodes_) {
    if (n.bound_param == nullptr || n.grad.data.empty()) continue;
    Parameter& p = *n.bound_param;
    if (p.grad.shape != p.value.shape) p.zero_grad();
    axpy(p.grad, n.grad);
  }
}

void Graph::apply_pending_bn() {
  for (auto& u : pending_bn) {
    Tensor& rm = *u.running_mean;
    Tensor& rv = *u.running_var;
    for (std::size_t c = 0; c < rm.data.size(); ++c) {
      rm.data[c] = (real(1) - u.momentum) * rm.data[c] + u.momentum * u.batch_mean.data[c];
      rv.data[c] = (real(1) - u.momentum) * rv.data[c] + u.momentum * u.batch_var.data[c];
    }
  }
  pending_bn.clear();
}

// ---- elementwise ------------------------------------------------------------

Var add(Graph& g, Var a, Var b) {
  const Tensor& av = g.val(a);
  const Tensor& bv = g.val(b);
  check_arg(av.same_shape(bv), "add: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
  Tensor out = av;
  axpy(out, bv);
  return g.make(std::move(out), {a.id, b.id}, "add", [a, b](Graph& gg, int self) {
    const Tensor& go = gg.grad_of(self);
    if (gg.needs(a.id)) axpy(gg.grad_of(a.id), go);
    if (gg.needs(b.id)) axpy(gg.grad_of(b.id), go);
  });
}

Var sub(Graph& g, Var a, Var b) {
  const Tensor& av = g.val(a);
  const Tensor& bv = g.val(b);
  check_arg(av.same_shape(bv), "sub: shape mismatch");
  Tensor out = av;
  axpy(out, bv, real(-1));
  return g.make(std::move(out), {a.id, b.id}, "sub", [a, b](Graph& gg, int self) {
    const Tensor& go = gg.grad_of(self);
    if (gg.needs(a.id)) axpy(gg.grad_of(a.id), go);
    if (gg.needs(b.id)) axpy(gg.grad_of(b.id), go, real(-1));
  });
}

Var mul(Graph& g, Var a, Var b) {
  const Tensor& av = g.val(a);
  const Tensor& bv = g.val(b);
  check_arg(av.same_shape(bv), "mul: shape mismatch");
  Tensor out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
  return g.make(std::move(out), {a.id, b.id}, "mul", [a, b](Graph& gg, int self) {
    const Tensor& go = gg.grad_of(self);
    const Tensor& av2 = gg.val_of(a.id);
    const Tensor& bv2 = gg.val_of(b.id);
    if (gg.needs(a.id)) {
      Tensor& ga = gg.grad_of(a.id);
      for (std::size_t i = 0; i < go.data.size(); ++i) ga.data[i] += go.data[i] * bv2.data[i];
    }
    if (gg.needs(b.id)) {
      Tensor& gb = gg.grad_of(b.id);
      for (std::size_t i = 0; i < go.data.size(); ++i) gb.data[i] += go.data[i] * av2.data[i];
    }
  });
}

Var scale(Graph& g, Var a, real c) {
  Tensor out = g.val(a);
  for (auto& x : out.data) x *= c;
  return g.make(std::move(out), {a.id}, "scale", [a, c](Graph& gg, int self) {
    if (gg.needs(a.id)) axpy(gg.grad_of(a.id), gg.grad_of(self), c);
  });
}

Var add_scalar(Graph& g, Var a, real c) {
  Tensor out = g.val(a);
  for (auto& x : out.data) x += c;
  return g.make(std::move(out), {a.id}, "add_scalar", [a](Graph& gg, int self) {
    if (gg.needs(a.id)) axpy(gg.grad_of(a.id), gg.grad_of(self));
  });
}

Var relu(Graph& g, Var a) {
  Tensor out = g.val(a);
  for (auto& x : out.data) x = x > real(0) ? x : real(0);
  return g.make(std::move(out), {a.id}, "relu", [a](Graph& gg, int self) {
    if (!gg.needs(a.id)) return;
    const Tensor& go = gg.grad_of(self);
    const Tensor& in = gg.val_of(a.id);
    Tensor& ga = gg.grad_of(a.id);
    for (std::size_t i = 0; i < go.data.size(); ++i) {
      if (in.data[i] > real(0)) ga.data[i] += go.data[i];
    }
  });
}

Var sigmoid(Graph& g, Var a) {
  Tensor out = g.val(a);
  for (auto& x : out.data) x = real(1) / (real(1) + std::exp(-x));
  return g.make(std::move(out), {a.id}, "sigmoid", [a](Graph& gg, int self) {
    if (!gg.needs(a.id)) return;
    const Tensor& go = gg.grad_of(self);
    const Tensor& sv = gg.val_of(self);
    Tensor& ga = gg.grad_of(a.id);
    for (std::size_t i = 0; i < go.data.size(); ++i) {
      ga.data[i] += go.data[i] * sv.data[i] * (real(1) - sv.data[i]);
    }
  });
}

Var log_op(Graph& g, Var a) {
  Tensor out = g.val(a);
  for (auto& x : out.data) x = std::log(x);
  return g.make(std::move(out), {a.id}, "log", [a](Graph& gg, int self) {
    if (!gg.needs(a.id)) return;
    const Tensor& go = gg.grad_of(self);
    const Tensor& in = gg.val_of(a.id);
    Tensor& ga = gg.grad_of(a.id);
    for (std::size_t i = 0; i < go.data.size(); ++i) ga.data[i] += go.data[i] / in.data[i];
  });
}

Var clamp(Graph& g, Var a, real lo, real hi) {
  check_arg(lo <= hi, "clamp: lo > hi");
  Tensor out = g.val(a);
  for (auto& x : out.data) x = std::min(hi, std::max(lo, x));
  return g.make(std::move(out), {a.id}, "clamp", [a, lo, hi](Graph& gg, int self) {
    if (!gg.needs(a.id)) return;
    const Tensor& go = gg.grad_of(self);
    const Tensor& in = gg.val_of(a.id);
    Tensor& ga = gg.grad_of(a.id);
    for (std::size_t i = 0; i < go.data.size(); ++i) {
      if (in.data[i] >= lo && in.data[i] <= hi) ga.data[i] += go.data[i];
    }
  });
}

Var reshape(Graph& g, Var a, std::vector<int> shape) {
  const Tensor& av = g.val(a);
  check_arg(shape_numel(shape) == av.numel(), "reshape: element count mismatch");
  Tensor out(shape, av.data);
  return g.make(std::move(out), {a.id}, "reshape", [a](Graph& gg, int self) {
    if (!gg.needs(a.id)) return;
    const Tensor& go = gg.grad_of(self);
    Tensor& ga = gg.grad_of(a.id);
    for (std::size_t i = 0; i < go.data.size(); ++i) ga.data[i] += go.data[i];
  });
}

Var transpose(Graph& g, Var a) {
  const Tensor& av = g.val(a);
  check_arg(av.ndim() == 2, "transpose: expects a 2-D tensor");
  const int r = av.shape[0], c = av.shape[1];
  Tensor out({c, r});
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) out.at(j, i) = av.at(i, j);
  }
  return g.make(std::move(out), {a.id}, "transpose", [a, r, c](Graph& gg, int self) {
    if (!gg.needs(a.id)) return;
    const Tensor& go = gg.grad_of(self);
    Tensor& ga = gg.grad_of(a.id);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) ga.at(i, j) += go.at(j, i);
    }
  });
}

Var swap_first2(Graph& g, Var a) {
  const Tensor& av = g.val(a);
  check_arg(av.ndim() >= 2, "swap_first2: needs >= 2 dims");
  const std::int64_t d0 = av.shape[0], d1 = av.shape[1];
  const std::int64_t inner = av.numel() / (d0 * d1);
  std::vector<int> oshape = av.shape;
  std::swap(oshape[0], oshape[1]);
  Tensor out(oshape);
  for (std::int64_t i = 0; i < d0; ++i) {
    for (std::int64_t j = 0; j < d1; ++j) {
      std::memcpy(out.ptr() + (j * d0 + i) * inner, av.ptr() + (i * d1 + j) * inner,
                  sizeof(real) * static_cast<std::size_t>(inner));
    }
  }
  return g.make(std::move(out), {a.id}, "swap_first2", [a, d0, d1, inner](Graph& gg, int self) {
    if (!gg.needs(a.id)) return;
    const Tensor& go = gg.grad_of(self);
    Tensor& ga = gg.grad_of(a.id);
    for (std::int64_t i = 0; i < d0; ++i) {
      for (std::int64_t j = 0; j < d1; ++j) {
        const real* src = go.ptr() + (j * d0 + i) * inner;
        real* dst = ga.ptr() + (i * d1 + j) * inner;
        for (std::int64_t t = 0; t < inner; ++t) dst[t] += src[t];
      }
    }
  });
}

Var concat_cols(Graph& g, Var a, Var b) {
  const Tensor& av = g.val(a);
  const Tensor& bv = g.val(b);
  check_arg(av.ndim() == 2 && bv.ndim() == 2 && av.shape[0] == bv.shape[0],
            "concat_cols: expects [T,Da],[T,Db]");
  const int t = av.shape[0], da = av.shape[1], db = bv.shape[1];
  Tensor out({t, da + db});
  for (int i = 0; i < t; ++i) {
    std::memcpy(out.ptr() + static_cast<std::size_t>(i) * (da + db),
                av.ptr() + static_cast<std::size_t>(i) * da,
                sizeof(real) * static_cast<std::size_t>(da));
    std::memcpy(out.ptr() + static_cast<std::size_t>(i) * (da + db) + da,
                bv.ptr() + static_cast<std::size_t>(i) * db,
                sizeof(real) * static_cast<std::size_t>(db));
  }
  return g.make(std::move(out), {a.id, b.id}, "concat_cols", [a, b, t, da, db](Graph& gg, int self) {
    const Tensor& go = gg.grad_of(self);
    if (gg.needs(a.id)) {
      Tensor& ga = gg.grad_of(a.id);
      for (int i = 0; i < t; ++i) {
        for (int j = 0; j < da; ++j) ga.at(i, j) += go.at(i, j);
      }
    }
    if (gg.needs(b.id)) {
      Tensor& gb = gg.grad_of(b.id);
      for (int i = 0; i < t; ++i) {
        for (int j = 0; j < db; ++j) gb.at(i, j) += go.at(i, da + j);
      }
    }
  });
}

Var slice_cols(Graph& g, Var a, int from, int to) {
  const Tensor& av = g.val(a);
  check_arg(av.ndim() == 2 && 0 <= from && from < to && to <= av.shape[1], "slice_cols: bad range");
  const int t = av.shape[0], w = to - from;
  Tensor out({t, w});
  for (int i = 0; i < t; ++i) {
    std::memcpy(out.ptr() + static_cast<std::size_t>(i) * w,
                av.ptr() + static_cast<std::size_t>(i) * av.shape[1] + from,
                sizeof(real) * static_cast<std::size_t>(w));
  }
  return g.make(std::move(out), {a.id}, "slice_cols", [a, from, t, w](Graph& gg, int self) {
    if (!gg.needs(a.id)) return;
    const Tensor& go = gg.grad_of(self);
    Tensor& ga = gg.grad_of(a.id);
    for (int i = 0; i < t; ++i) {
      for (int j = 0; j < w; ++j) ga.at(i, from + j) += go.at(i, j);
    }
  });
}

Var slice_rows(Graph& g, Var a, int from, int to) {
  const Tensor& av = g.val(a);
  check_arg(av.ndim() == 2 && 0 <= from && from < to && to <= av.shape[0], "slice_rows: bad range");
  const int d = av.shape[1], h = to - from;
  Tensor out({h, d});
  std::memcpy(out.ptr(), av.ptr() + static_cast<std::size_t>(from) * d,
              sizeof(real) * static_cast<std::size_t>(h) * d);
  return g.make(std::move(out), {a.id}, "slice_rows", [a, from, h, d](Graph& gg, int self) {
    if (!gg.needs(a.id)) return;
    const Tensor& go = gg.grad_of(self);
    Tensor& ga = gg.grad_of(a.id);
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < d; ++j) ga.at(from + i, j) += go.at(i, j);
    }
  });
}

// ---- reductions --------------------------------------------------------------

Var sum_all(Graph& g, Var a) {
  const Tensor& av = g.val(a);
  double s = 0;  // double accumulation: the scalar head of every loss
  for (real x : av.data) s += static_cast<double>(x);
  Tensor out({1});
  out.data[0] = static_cast<real>(s);
  return g.make(std::move(out), {a.id}, "sum_all", [a](Graph& gg, int self) {
    if (!gg.needs(a.id)) return;
    const real go = gg.grad_of(self).data[0];
    Tensor& ga = gg.grad_of(a.id);
    for (auto& x : ga.data) x += go;
  });
}

Var mean_all(Graph& g, Var a) {
  const std::int64_t n = g.val(a).numel();
  return scale(g, sum_all(g, a), real(1) / static_cast<real>(n));
}

Var mean_last(Graph& g, Var a) {
  const Tensor& av = g.val(a);
  check_arg(av.ndim() >= 1, "mean_last: scalar input");
  const int last = av.shape.back();
  std::vector<int> oshape(av.shape.begin(), av.shape.end() - 1);
  if (oshape.empty()) oshape = {1};
  Tensor out(oshape);
  const std::int64_t rows = out.numel();
  const real inv = real(1) / static_cast<real>(last);
  for (std::int64_t i = 0; i < rows; ++i) {
    real s = 0;
    const real* src = av.ptr() + i * last;
    for (int j = 0; j < last; ++j) s += src[j];
    out.data[static_cast<std::size_t>(i)] = s * inv;
  }
  return g.make(std::move(out), {a.id}, "mean_last", [a, last, rows, inv](Graph& gg, int self) {
    if (!gg.needs(a.id)) return;
    const Tensor& go = gg.grad_of(self);
    Tensor& ga = gg.grad_of(a.id);
    for (std::int64_t i = 0; i < rows; ++i) {
      const real gv = go.data[static_cast<std::size_t>(i)] * inv;
      real* dst = ga.ptr() + i * last;
      for (int j = 0; j < last; ++j) dst[j] += gv;
    }
  });
}

Var mean_last2(Graph& g, Var a) {
  const Tensor& av = g.val(a);
  check_arg(av.ndim() >= 2, "mean_last2: needs >= 2 dims");
  const int h = av.shape[av.shape.size() - 2];
  const int w = av.shape[av.shape.size() - 1];
  std::vector<int> oshape(av.shape.begin(), av.shape.end() - 2);
  if (oshape.empty()) oshape = {1};
  Tensor out(oshape);
  const std::int64_t rows = out.numel();
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  const real inv = real(1) / static_cast<real>(hw);
  for (std::int64_t i = 0; i < rows; ++i) {
    real s = 0;
    const real* src = av.ptr() + i * hw;
    for (std::int64_t j = 0; j < hw; ++j) s += src[j];
    out.data[static_cast<std::size_t>(i)] = s * inv;
  }
  return g.make(std::move(out), {a.id}, "mean_last2", [a, hw, rows, inv](Graph& gg, int self) {
    if (!gg.needs(a.id)) return;
    const Tensor& go = gg.grad_of(self);
    Tensor& ga = gg.grad_of(a.id);
    for (std::int64_t i = 0; i < rows; ++i) {
      const real gv = go.data[static_cast<std::size_t>(i)] * inv;
      real* dst = ga.ptr() + i * hw;
      for (std::int64_t j = 0; j < hw; ++j) dst[j] += gv;
    }
  });
}

// ---- linear algebra -----------------------------------------------------------

Var matmul(Graph& g, Var a, Var b) {
  const Tensor& av = g.val(a);
  const Tensor& bv = g.val(b);
  check_arg(av.ndim() == 2 && bv.ndim() == 2 && av.shape[1] == bv.shape[0],
            "matmul: incompatible shapes " + av.shape_str() + " x " + bv.shape_str());
  const int m = av.shape[0], k = av.shape[1], n = bv.shape[1];
  Tensor out({m, n});
  gemm_nn(m, n, k, av.ptr(), bv.ptr(), out.ptr(), false);
  return g.make(std::move(out), {a.id, b.id}, "matmul", [a, b, m, k, n](Graph& gg, int self) {
    const Tensor& go = gg.grad_of(self);
    if (gg.needs(a.id)) {
      // dA = dOut * B^T
      gemm_nt(m, k, n, go.ptr(), gg.val_of(b.id).ptr(), gg.grad_of(a.id).ptr(), true);
    }
    if (gg.needs(b.id)) {
      // dB = A^T * dOut
      gemm_tn(k, n, m, gg.val_of(a.id).ptr(), go.ptr(), gg.grad_of(b.id).ptr(), true);
    }
  });
}

Var linear(Graph& g, Var x, Var w, Var b) {
  const Tensor& xv = g.val(x);
  const Tensor& wv = g.val(w);
  check_arg(xv.ndim() == 2 && wv.ndim() == 2 && xv.shape[1] == wv.shape[1],
            "linear: expects x[T,in], w[out,in]; got " + xv.shape_str() + ", " + wv.shape_str());
  const int t = xv.shape[0], in = xv.shape[1], out_dim = wv.shape[0];
  if (b.valid()) {
    check_arg(g.val(b).numel() == out_dim, "linear: bias length mismatch");
  }
  Tensor out({t, out_dim});
  gemm_nt(t, out_dim, in, xv.ptr(), wv.ptr(), out.ptr(), false);
  if (b.valid()) {
    const Tensor& bv = g.val(b);
    for (int i = 0; i < t; ++i) {
      real* row = out.ptr() + static_cast<std::size_t>(i) * out_dim;
      for (int j = 0; j < out_dim; ++j) row[j] += bv.data[static_cast<std::size_t>(j)];
    }
  }
  std::vector<int> parents = {x.id, w.id};
  if (b.valid()) parents.push_back(b.id);
  return g.make(std::move(out), std::move(parents), "linear",
                [x, w, b, t, in, out_dim](Graph& gg, int self) {
                  const Tensor& go = gg.grad_of(self);
                  if (gg.needs(x.id)) {
                    // dX = dOut * W
                    gemm_nn(t, in, out_dim, go.ptr(), gg.val_of(w.id).ptr(),
                            gg.grad_of(x.id).ptr(), true);
                  }
                  if (gg.needs(w.id)) {
                    // dW = dOut^T * X
                    gemm_tn(out_dim, in, t, go.ptr(), gg.val_of(x.id).ptr(),
                            gg.grad_of(w.id).ptr(), true);
                  }
                  if (b.valid() && gg.needs(b.id)) {
                    Tensor& gb = gg.grad_of(b.id);
                    for (int i = 0; i < t; ++i) {
                      const real* row = go.ptr() + static_cast<std::size_t>(i) * out_dim;
                      for (int j = 0; j < out_dim; ++j) gb.data[static_cast<std::size_t>(j)] += row[j];
                    }
                  }
                });
}

Var softmax(Graph& g, Var a, int axis) {
  const Tensor& av = g.val(a);
  check_arg(axis >= 0 && axis < av.ndim(), "softmax: bad axis");
  std::int64_t outer, c, inner;
  axis_split(av.shape, axis, outer, c, inner);
  Tensor out(av.shape);
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t in = 0; in < inner; ++in) {
      const real* src = av.ptr() + (o * c) * inner + in;
      real* dst = out.ptr() + (o * c) * inner + in;
      real mx = src[0];
      for (std::int64_t j = 1; j < c; ++j) mx = std::max(mx, src[j * inner]);
      real denom = 0;
      for (std::int64_t j = 0; j < c; ++j) {
        const real e = std::exp(src[j * inner] - mx);
        dst[j * inner] = e;
        denom += e;
      }
      const real inv = real(1) / denom;
      for (std::int64_t j = 0; j < c; ++j) dst[j * inner] *= inv;
    }
  }
  return g.make(std::move(out), {a.id}, "softmax", [a, outer, c, inner](Graph& gg, int self) {
    if (!gg.needs(a.id)) return;
    const Tensor& go = gg.grad_of(self);
    const Tensor& sv = gg.val_of(self);
    Tensor& ga = gg.grad_of(a.id);
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t in = 0; in < inner; ++in) {
        const std::int64_t base = (o * c) * inner + in;
        real dot = 0;
        for (std::int64_t j = 0; j < c; ++j) {
          dot += go.data[static_cast<std::size_t>(base + j * inner)] *
                 sv.data[static_cast<std::size_t>(base + j * inner)];
        }
        for (std::int64_t j = 0; j < c; ++j) {
          const std::size_t idx = static_cast<std::size_t>(base + j * inner);
          ga.data[idx] += sv.data[idx] * (go.data[idx] - dot);
        }
      }
    }
  });
}

Var channel_scale(Graph& g, Var x, Var s) {
  const Tensor& xv = g.val(x);
  const Tensor& sv = g.val(s);
  check_arg(xv.ndim() >= 1 && sv.numel() == xv.shape[0], "channel_scale: s length must match dim 0");
  const std::int64_t c = xv.shape[0];
  const std::int64_t inner = xv.numel() / c;
  Tensor out = xv;
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const real sc = sv.data[static_cast<std::size_t>(ch)];
    real* row = out.ptr() + ch * inner;
    for (std::int64_t i = 0; i < inner; ++i) row[i] *= sc;
  }
  return g.make(std::move(out), {x.id, s.id}, "channel_scale", [x, s, c, inner](Graph& gg, int self) {
    const Tensor& go = gg.grad_of(self);
    const Tensor& xv2 = gg.val_of(x.id);
    const Tensor& sv2 = gg.val_of(s.id);
    if (gg.needs(x.id)) {
      Tensor& gx = gg.grad_of(x.id);
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const real sc = sv2.data[static_cast<std::size_t>(ch)];
        const real* gr = go.ptr() + ch * inner;
        real* dst = gx.ptr() + ch * inner;
        for (std::int64_t i = 0; i < inner; ++i) dst[i] += gr[i] * sc;
      }
    }
    if (gg.needs(s.id)) {
      Tensor& gs = gg.grad_of(s.id);
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const real* gr = go.ptr() + ch * inner;
        const real* xr = xv2.ptr() + ch * inner;
        real acc = 0;
        for (std::int64_t i = 0; i < inner; ++i) acc += gr[i] * xr[i];
        gs.data[static_cast<std::size_t>(ch)] += acc;
      }
    }
  });
}

// ---- convolutions ----------------------------------------------------------

int conv_out_len(int in_len, int kernel, int stride, int dilation, int padding) {
  const int span = dilation * (kernel - 1) + 1;
  check_arg(in_len + 2 * padding >= span,
            "conv: input too short for kernel span (need L+2p >= (K-1)*d+1)");
  return (in_len + 2 * padding - span) / stride + 1;
}

namespace {

// col[(ci*K + k), o] layout for all im2col variants.
void im2col_1d(const real* x, int cin, int l, int kk, int stride, int dil, int pad, int lout,
               real* col) {
  for (int ci = 0; ci < cin; ++ci) {
    for (int k = 0; k < kk; ++k) {
      real* dst = col + (static_cast<std::size_t>(ci) * kk + k) * lout;
      const int off = k * dil - pad;
      for (int o = 0; o < lout; ++o) {
        const int src = o * stride + off;
        dst[o] = (src >= 0 && src < l) ? x[static_cast<std::size_t>(ci) * l + src] : real(0);
      }
    }
  }
}

void col2im_1d(const real* col, int cin, int l, int kk, int stride, int dil, int pad, int lout,
               real* gx) {
  for (int ci = 0; ci < cin; ++ci) {
    for (int k = 0; k < kk; ++k) {
      const real* src = col + (static_cast<std::size_t>(ci) * kk + k) * lout;
      const int off = k * dil - pad;
      for (int o = 0; o < lout; ++o) {
        const int dst = o * stride + off;
        if (dst >= 0 && dst < l) gx[static_cast<std::size_t>(ci) * l + dst] += src[o];
      }
    }
  }
}

void im2col_2d(const real* x, int cin, int h, int w, int kh, int kw, const Conv2dArgs& a, int oh,
               int ow, real* col) {
  const std::int64_t osz = static_cast<std::int64_t>(oh) * ow;
  for (int ci = 0; ci < cin; ++ci) {
    const real* plane = x + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        real* dst = col + ((static_cast<std::size_t>(ci) * kh + ky) * kw + kx) * osz;
        const int oy_base = ky * a.dil_h - a.pad_h;
        const int ox_base = kx * a.dil_w - a.pad_w;
        for (int oy = 0; oy < oh; ++oy) {
          const int sy = oy * a.stride_h + oy_base;
          real* drow = dst + static_cast<std::size_t>(oy) * ow;
          if (sy < 0 || sy >= h) {
            std::memset(drow, 0, sizeof(real) * static_cast<std::size_t>(ow));
            continue;
          }
          const real* srow = plane + static_cast<std::size_t>(sy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int sx = ox * a.stride_w + ox_base;
            drow[ox] = (sx >= 0 && sx < w) ? srow[sx] : real(0);
          }
        }
      }
    }
  }
}

void col2im_2d(const real* col, int cin, int h, int w, int kh, int kw, const Conv2dArgs& a, int oh,
               int ow, real* gx) {
  const std::int64_t osz = static_cast<std::int64_t>(oh) * ow;
  for (int ci = 0; ci < cin; ++ci) {
    real* plane = gx + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const real* src = col + ((static_cast<std::size_t>(ci) * kh + ky) * kw + kx) * osz;
        const int oy_base = ky * a.dil_h - a.pad_h;
        const int ox_base = kx * a.dil_w - a.pad_w;
        for (int oy = 0; oy < oh; ++oy) {
          const int sy = oy * a.stride_h + oy_base;
          if (sy < 0 || sy >= h) continue;
          const real* srow = src + static_cast<std::size_t>(oy) * ow;
          real* drow = plane + static_cast<std::size_t>(sy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int sx = ox * a.stride_w + ox_base;
            if (sx >= 0 && sx < w) drow[sx] += srow[ox];
          }
        }
      }
    }
  }
}

void im2col_3d(const real* x, int cin, int d, int h, int w, int kd, int kh, int kw,
               const Conv3dArgs& a, int od, int oh, int ow, real* col) {
  const std::int64_t osz = static_cast<std::int64_t>(od) * oh * ow;
  std::int64_t tap = 0;
  for (int ci = 0; ci < cin; ++ci) {
    const real* vol = x + static_cast<std::size_t>(ci) * d * h * w;
    for (int kz = 0; kz < kd; ++kz) {
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx, ++tap) {
          real* dst = col + tap * osz;
          for (int oz = 0; oz < od; ++oz) {
            const int sz = oz * a.stride_d + kz - a.pad_d;
            for (int oy = 0; oy < oh; ++oy) {
              const int sy = oy * a.stride_h + ky - a.pad_h;
              real* drow = dst + (static_cast<std::size_t>(oz) * oh + oy) * ow;
              if (sz < 0 || sz >= d || sy < 0 || sy >= h) {
                std::memset(drow, 0, sizeof(real) * static_cast<std::size_t>(ow));
                continue;
              }
              const real* srow = vol + (static_cast<std::size_t>(sz) * h + sy) * w;
              for (int ox = 0; ox < ow; ++ox) {
                const int sx = ox * a.stride_w + kx - a.pad_w;
                drow[ox] = (sx >= 0 && sx < w) ? srow[sx] : real(0);
              }
            }
          }
        }
      }
    }
  }
}

void col2im_3d(const real* col, int cin, int d, int h, int w, int kd, int kh, int kw,
               const Conv3dArgs& a, int od, int oh, int ow, real* gx) {
  const std::int64_t osz = static_cast<std::int64_t>(od) * oh * ow;
  std::int64_t tap = 0;
  for (int ci = 0; ci < cin; ++ci) {
    real* vol = gx + static_cast<std::size_t>(ci) * d * h * w;
    for (int kz = 0; kz < kd; ++kz) {
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx, ++tap) {
          const real* src = col + tap * osz;
          for (int oz = 0; oz < od; ++oz) {
            const int sz = oz * a.stride_d + kz - a.pad_d;
            if (sz < 0 || sz >= d) continue;
            for (int oy = 0; oy < oh; ++oy) {
              const int sy = oy * a.stride_h + ky - a.pad_h;
              if (sy < 0 || sy >= h) continue;
              const real* srow = src + (static_cast<std::size_t>(oz) * oh + oy) * ow;
              real* drow = vol + (static_cast<std::size_t>(sz) * h + sy) * w;
              for (int ox = 0; ox < ow; ++ox) {
                const int sx = ox * a.stride_w + kx - a.pad_w;
                if (sx >= 0 && sx < w) drow[sx] += srow[ox];
              }
            }
          }
        }
      }
    }
  }
}

void add_channel_bias(real* y, const real* bias, int cout, std::int64_t per_channel) {
  for (int co = 0; co < cout; ++co) {
    real* row = y + co * per_channel;
    const real b = bias[co];
    for (std::int64_t i = 0; i < per_channel; ++i) row[i] += b;
  }
}

void bias_grad_from(const real* gy, real* gbias, int cout, std::int64_t per_channel) {
  for (int co = 0; co < cout; ++co) {
    const real* row = gy + co * per_channel;
    real acc = 0;
    for (std::int64_t i = 0; i < per_channel; ++i) acc += row[i];
    gbias[co] += acc;
  }
}

}  // namespace

Var conv1d(Graph& g, Var x, Var w, Var bias, const Conv1dArgs& args) {
  const Tensor& xv = g.val(x);
  const Tensor& wv = g.val(w);
  check_arg(xv.ndim() == 2, "conv1d: input must be [Cin,L]");
  check_arg(wv.ndim() == 3, "conv1d: weight must be [Cout,Cin/groups,K]");
  check_arg(args.stride >= 1 && args.dilation >= 1 && args.padding >= 0 && args.groups >= 1,
            "conv1d: bad args");
  const int cin = xv.shape[0], l = xv.shape[1];
  const int cout = wv.shape[0], wc = wv.shape[1], kk = wv.shape[2];
  check_arg(cin % args.groups == 0 && cout % args.groups == 0,
            "conv1d: channels not divisible by groups");
  check_arg(wc == cin / args.groups, "conv1d: weight channel dim mismatch");
  const int lout = conv_out_len(l, kk, args.stride, args.dilation, args.padding);
  if (bias.valid()) check_arg(g.val(bias).numel() == cout, "conv1d: bias length mismatch");

  const int gcin = cin / args.groups, gcout = cout / args.groups;
  const std::int64_t colsz = static_cast<std::int64_t>(gcin) * kk * lout;
  Tensor out({cout, lout});
  std::vector<real> col(static_cast<std::size_t>(colsz));
  for (int grp = 0; grp < args.groups; ++grp) {
    im2col_1d(xv.ptr() + static_cast<std::size_t>(grp) * gcin * l, gcin, l, kk, args.stride,
              args.dilation, args.padding, lout, col.data());
    gemm_nn(gcout, lout, gcin * kk, wv.ptr() + static_cast<std::size_t>(grp) * gcout * gcin * kk,
            col.data(), out.ptr() + static_cast<std::size_t>(grp) * gcout * lout, false);
  }
  if (bias.valid()) add_channel_bias(out.ptr(), g.val(bias).ptr(), cout, lout);

  std::vector<int> parents = {x.id, w.id};
  if (bias.valid()) parents.push_back(bias.id);
  const Conv1dArgs a = args;
  return g.make(std::move(out), std::move(parents), "conv1d",
                [x, w, bias, a, cin, l, cout, kk, lout](Graph& gg, int self) {
                  const Tensor& go = gg.grad_of(self);
                  const int gcin = cin / a.groups, gcout = cout / a.groups;
                  const std::int64_t colsz = static_cast<std::int64_t>(gcin) * kk * lout;
                  std::vector<real> col(static_cast<std::size_t>(colsz));
                  const bool need_x = gg.needs(x.id);
                  const bool need_w = gg.needs(w.id);
                  for (int grp = 0; grp < a.groups; ++grp) {
                    const real* xg = gg.val_of(x.id).ptr() + static_cast<std::size_t>(grp) * gcin * l;
                    const real* wg =
                        gg.val_of(w.id).ptr() + static_cast<std::size_t>(grp) * gcout * gcin * kk;
                    const real* gog = go.ptr() + static_cast<std::size_t>(grp) * gcout * lout;
                    if (need_w) {
                      im2col_1d(xg, gcin, l, kk, a.stride, a.dilation, a.padding, lout, col.data());
                      gemm_nt(gcout, gcin * kk, lout, gog, col.data(),
                              gg.grad_of(w.id).ptr() + static_cast<std::size_t>(grp) * gcout * gcin * kk,
                              true);
                    }
                    if (need_x) {
                      gemm_tn(gcin * kk, lout, gcout, wg, gog, col.data(), false);
                      col2im_1d(col.data(), gcin, l, kk, a.stride, a.dilation, a.padding, lout,
                                gg.grad_of(x.id).ptr() + static_cast<std::size_t>(grp) * gcin * l);
                    }
                  }
                  if (bias.valid() && gg.needs(bias.id)) {
                    bias_grad_from(go.ptr(), gg.grad_of(bias.id).ptr(), cout, lout);
                  }
                });
}

Var conv2d(Graph& g, Var x, Var w, Var bias, const Conv2dArgs& args) {
  const Tensor& xv = g.val(x);
  const Tensor& wv = g.val(w);
  check_arg(xv.ndim() == 4, "conv2d: input must be [N,Cin,H,W]");
  check_arg(wv.ndim() == 4, "conv2d: weight must be [Cout,Cin,KH,KW]");
  const int n = xv.shape[0], cin = xv.shape[1], h = xv.shape[2], wdt = xv.shape[3];
  const int cout = wv.shape[0], kh = wv.shape[2], kw = wv.shape[3];
  check_arg(wv.shape[1] == cin, "conv2d: channel mismatch");
  const int oh = conv_out_len(h, kh, args.stride_h, args.dil_h, args.pad_h);
  const int ow = conv_out_len(wdt, kw, args.stride_w, args.dil_w, args.pad_w);
  if (bias.valid()) check_arg(g.val(bias).numel() == cout, "conv2d: bias length mismatch");

  const std::int64_t isz = static_cast<std::int64_t>(cin) * h * wdt;
  const std::int64_t osz = static_cast<std::int64_t>(oh) * ow;
  const std::int64_t colsz = static_cast<std::int64_t>(cin) * kh * kw * osz;
  Tensor out({n, cout, oh, ow});
  std::vector<real> col(static_cast<std::size_t>(colsz));
  for (int i = 0; i < n; ++i) {
    im2col_2d(xv.ptr() + i * isz, cin, h, wdt, kh, kw, args, oh, ow, col.data());
    real* y = out.ptr() + static_cast<std::int64_t>(i) * cout * osz;
    gemm_nn(cout, static_cast<int>(osz), cin * kh * kw, wv.ptr(), col.data(), y, false);
    if (bias.valid()) add_channel_bias(y, g.val(bias).ptr(), cout, osz);
  }

  std::vector<int> parents = {x.id, w.id};
  if (bias.valid()) parents.push_back(bias.id);
  const Conv2dArgs a = args;
  return g.make(std::move(out), std::move(parents), "conv2d",
                [x, w, bias, a, n, cin, h, wdt, cout, kh, kw, oh, ow](Graph& gg, int self) {
                  const Tensor& go = gg.grad_of(self);
                  const std::int64_t isz = static_cast<std::int64_t>(cin) * h * wdt;
                  const std::int64_t osz = static_cast<std::int64_t>(oh) * ow;
                  const std::int64_t colsz = static_cast<std::int64_t>(cin) * kh * kw * osz;
                  std::vector<real> col(static_cast<std::size_t>(colsz));
                  const bool need_x = gg.needs(x.id);
                  const bool need_w = gg.needs(w.id);
                  for (int i = 0; i < n; ++i) {
                    const real* gyi = go.ptr() + static_cast<std::int64_t>(i) * cout * osz;
                    if (need_w) {
                      im2col_2d(gg.val_of(x.id).ptr() + i * isz, cin, h, wdt, kh, kw, a, oh, ow,
                                col.data());
                      gemm_nt(cout, cin * kh * kw, static_cast<int>(osz), gyi, col.data(),
                              gg.grad_of(w.id).ptr(), true);
                    }
                    if (need_x) {
                      gemm_tn(cin * kh * kw, static_cast<int>(osz), cout, gg.val_of(w.id).ptr(), gyi,
                              col.data(), false);
                      col2im_2d(col.data(), cin, h, wdt, kh, kw, a, oh, ow,
                                gg.grad_of(x.id).ptr() + i * isz);
                    }
                  }
                  if (bias.valid() && gg.needs(bias.id)) {
                    for (int i = 0; i < n; ++i) {
                      bias_grad_from(go.ptr() + static_cast<std::int64_t>(i) * cout * osz,
                                     gg.grad_of(bias.id).ptr(), cout, osz);
                    }
                  }
                });
}

Var conv3d(Graph& g, Var x, Var w, Var bias, const Conv3dArgs& args) {
  const Tensor& xv = g.val(x);
  const Tensor& wv = g.val(w);
  check_arg(xv.ndim() == 4, "conv3d: input must be [Cin,D,H,W]");
  check_arg(wv.ndim() == 5, "conv3d: weight must be [Cout,Cin,KD,KH,KW]");
  const int cin = xv.shape[0], d = xv.shape[1], h = xv.shape[2], wdt = xv.shape[3];
  const int cout = wv.shape[0], kd = wv.shape[2], kh = wv.shape[3], kw = wv.shape[4];
  check_arg(wv.shape[1] == cin, "conv3d: channel mismatch");
  const int od = conv_out_len(d, kd, args.stride_d, 1, args.pad_d);
  const int oh = conv_out_len(h, kh, args.stride_h, 1, args.pad_h);
  const int ow = conv_out_len(wdt, kw, args.stride_w, 1, args.pad_w);
  if (bias.valid()) check_arg(g.val(bias).numel() == cout, "conv3d: bias length mismatch");

  const std::int64_t osz = static_cast<std::int64_t>(od) * oh * ow;
  const std::int64_t ktaps = static_cast<std::int64_t>(cin) * kd * kh * kw;
  Tensor out({cout, od, oh, ow});
  std::vector<real> col(static_cast<std::size_t>(ktaps * osz));
  im2col_3d(xv.ptr(), cin, d, h, wdt, kd, kh, kw, args, od, oh, ow, col.data());
  gemm_nn(cout, static_cast<int>(osz), static_cast<int>(ktaps), wv.ptr(), col.data(), out.ptr(),
          false);
  if (bias.valid()) add_channel_bias(out.ptr(), g.val(bias).ptr(), cout, osz);

  std::vector<int> parents = {x.id, w.id};
  if (bias.valid()) parents.push_back(bias.id);
  const Conv3dArgs a = args;
  return g.make(std::move(out), std::move(parents), "conv3d",
                [x, w, bias, a, cin, d, h, wdt, cout, kd, kh, kw, od, oh, ow](Graph& gg, int self) {
                  const Tensor& go = gg.grad_of(self);
                  const std::int64_t osz = static_cast<std::int64_t>(od) * oh * ow;
                  const std::int64_t ktaps = static_cast<std::int64_t>(cin) * kd * kh * kw;
                  std::vector<real> col(static_cast<std::size_t>(ktaps * osz));
                  if (gg.needs(w.id)) {
                    im2col_3d(gg.val_of(x.id).ptr(), cin, d, h, wdt, kd, kh, kw, a, od, oh, ow,
                              col.data());
                    gemm_nt(cout, static_cast<int>(ktaps), static_cast<int>(osz), go.ptr(),
                            col.data(), gg.grad_of(w.id).ptr(), true);
                  }
                  if (gg.needs(x.id)) {
                    gemm_tn(static_cast<int>(ktaps), static_cast<int>(osz), cout,
                            gg.val_of(w.id).ptr(), go.ptr(), col.data(), false);
                    col2im_3d(col.data(), cin, d, h, wdt, kd, kh, kw, a, od, oh, ow,
                              gg.grad_of(x.id).ptr());
                  }
                  if (bias.valid() && gg.needs(bias.id)) {
                    bias_grad_from(go.ptr(), gg.grad_of(bias.id).ptr(), cout, osz);
                  }
                });
}

// ---- normalization -----------------------------------------------------------

Var batch_norm(Graph& g, Var x, Var gamma, Var beta, Tensor& running_mean, Tensor& running_var,
               const BatchNormArgs& args) {
  const Tensor& xv = g.val(x);
  check_arg(args.channel_axis >= 0 && args.channel_axis < xv.ndim(), "batch_norm: bad channel axis");
  std::int64_t outer, c, inner;
  axis_split(xv.shape, args.channel_axis, outer, c, inner);
  check_arg(g.val(gamma).numel() == c && g.val(beta).numel() == c,
            "batch_norm: gamma/beta length must match channel count");
  check_arg(static_cast<std::int64_t>(running_mean.data.size()) == c &&
                static_cast<std::int64_t>(running_var.data.size()) == c,
            "batch_norm: running stats length mismatch");

  const std::int64_t cnt = outer * inner;
  Tensor mean({static_cast<int>(c)});
  Tensor var({static_cast<int>(c)});
  if (args.training) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      real s = 0;
      for (std::int64_t o = 0; o < outer; ++o) {
        const real* src = xv.ptr() + (o * c + ch) * inner;
        for (std::int64_t i = 0; i < inner; ++i) s += src[i];
      }
      const real m = s / static_cast<real>(cnt);
      real v = 0;
      for (std::int64_t o = 0; o < outer; ++o) {
        const real* src = xv.ptr() + (o * c + ch) * inner;
        for (std::int64_t i = 0; i < inner; ++i) {
          const real d = src[i] - m;
          v += d * d;
        }
      }
      mean.data[static_cast<std::size_t>(ch)] = m;
      var.data[static_cast<std::size_t>(ch)] = v / static_cast<real>(cnt);
    }
    g.pending_bn.push_back({&running_mean, &running_var, mean, var, args.momentum});
  } else {
    mean.data.assign(running_mean.data.begin(), running_mean.data.end());
    var.data.assign(running_var.data.begin(), running_var.data.end());
  }

  const Tensor& gv = g.val(gamma);
  const Tensor& bv = g.val(beta);
  Tensor out(xv.shape);
  std::vector<real> inv_std(static_cast<std::size_t>(c));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    inv_std[static_cast<std::size_t>(ch)] =
        real(1) / std::sqrt(var.data[static_cast<std::size_t>(ch)] + args.eps);
  }
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const real m = mean.data[static_cast<std::size_t>(ch)];
      const real is = inv_std[static_cast<std::size_t>(ch)];
      const real ga = gv.data[static_cast<std::size_t>(ch)];
      const real be = bv.data[static_cast<std::size_t>(ch)];
      const real* src = xv.ptr() + (o * c + ch) * inner;
      real* dst = out.ptr() + (o * c + ch) * inner;
      for (std::int64_t i = 0; i < inner; ++i) dst[i] = (src[i] - m) * is * ga + be;
    }
  }

  const bool training = args.training;
  return g.make(
      std::move(out), {x.id, gamma.id, beta.id}, "batch_norm",
      [x, gamma, beta, outer, c, inner, mean, var, eps = args.eps, training](Graph& gg, int self) {
        const Tensor& go = gg.grad_of(self);
        const Tensor& xv2 = gg.val_of(x.id);
        const Tensor& gv2 = gg.val_of(gamma.id);
        const std::int64_t cnt = outer * inner;
        for (std::int64_t ch = 0; ch < c; ++ch) {
          const real m = mean.data[static_cast<std::size_t>(ch)];
          const real is = real(1) / std::sqrt(var.data[static_cast<std::size_t>(ch)] + eps);
          const real ga = gv2.data[static_cast<std::size_t>(ch)];
          // channel reductions
          real sum_g = 0, sum_gx = 0;
          for (std::int64_t o = 0; o < outer; ++o) {
            const real* gr = go.ptr() + (o * c + ch) * inner;
            const real* xr = xv2.ptr() + (o * c + ch) * inner;
            for (std::int64_t i = 0; i < inner; ++i) {
              sum_g += gr[i];
              sum_gx += gr[i] * (xr[i] - m) * is;
            }
          }
          if (gg.needs(gamma.id)) gg.grad_of(gamma.id).data[static_cast<std::size_t>(ch)] += sum_gx;
          if (gg.needs(beta.id)) gg.grad_of(beta.id).data[static_cast<std::size_t>(ch)] += sum_g;
          if (!gg.needs(x.id)) continue;
          Tensor& gx = gg.grad_of(x.id);
          if (training) {
            // full batch-stat backward
            const real inv_cnt = real(1) / static_cast<real>(cnt);
            for (std::int64_t o = 0; o < outer; ++o) {
              const real* gr = go.ptr() + (o * c + ch) * inner;
              const real* xr = xv2.ptr() + (o * c + ch) * inner;
              real* dst = gx.ptr() + (o * c + ch) * inner;
              for (std::int64_t i = 0; i < inner; ++i) {
                const real xhat = (xr[i] - m) * is;
                dst[i] += ga * is * (gr[i] - inv_cnt * sum_g - xhat * inv_cnt * sum_gx);
              }
            }
          } else {
            const real k = ga * is;
            for (std::int64_t o = 0; o < outer; ++o) {
              const real* gr = go.ptr() + (o * c + ch) * inner;
              real* dst = gx.ptr() + (o * c + ch) * inner;
              for (std::int64_t i = 0; i < inner; ++i) dst[i] += k * gr[i];
            }
          }
        }
      });
}

Var layer_norm(Graph& g, Var x, Var gamma, Var beta, real eps) {
  const Tensor& xv = g.val(x);
  check_arg(xv.ndim() >= 1, "layer_norm: scalar input");
  const std::int64_t d = xv.shape.back();
  const std::int64_t rows = xv.numel() / d;
  check_arg(g.val(gamma).numel() == d && g.val(beta).numel() == d,
            "layer_norm: gamma/beta must match last dim");
  const Tensor& gv = g.val(gamma);
  const Tensor& bv = g.val(beta);
  Tensor out(xv.shape);
  std::vector<real> means(static_cast<std::size_t>(rows)), inv_stds(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    const real* src = xv.ptr() + r * d;
    real m = 0;
    for (std::int64_t i = 0; i < d; ++i) m += src[i];
    m /= static_cast<real>(d);
    real v = 0;
    for (std::int64_t i = 0; i < d; ++i) {
      const real dd = src[i] - m;
      v += dd * dd;
    }
    v /= static_cast<real>(d);
    const real is = real(1) / std::sqrt(v + eps);
    means[static_cast<std::size_t>(r)] = m;
    inv_stds[static_cast<std::size_t>(r)] = is;
    real* dst = out.ptr() + r * d;
    for (std::int64_t i = 0; i < d; ++i) {
      dst[i] = (src[i] - m) * is * gv.data[static_cast<std::size_t>(i)] +
               bv.data[static_cast<std::size_t>(i)];
    }
  }
  return g.make(std::move(out), {x.id, gamma.id, beta.id}, "layer_norm",
                [x, gamma, beta, d, rows, means, inv_stds](Graph& gg, int self) {
                  const Tensor& go = gg.grad_of(self);
                  const Tensor& xv2 = gg.val_of(x.id);
                  const Tensor& gv2 = gg.val_of(gamma.id);
                  const real invd = real(1) / static_cast<real>(d);
                  for (std::int64_t r = 0; r < rows; ++r) {
                    const real m = means[static_cast<std::size_t>(r)];
                    const real is = inv_stds[static_cast<std::size_t>(r)];
                    const real* gr = go.ptr() + r * d;
                    const real* xr = xv2.ptr() + r * d;
                    real sum_dxhat = 0, sum_dxhat_xhat = 0;
                    for (std::int64_t i = 0; i < d; ++i) {
                      const real xhat = (xr[i] - m) * is;
                      const real dxhat = gr[i] * gv2.data[static_cast<std::size_t>(i)];
                      sum_dxhat += dxhat;
                      sum_dxhat_xhat += dxhat * xhat;
                      if (gg.needs(gamma.id)) {
                        gg.grad_of(gamma.id).data[static_cast<std::size_t>(i)] += gr[i] * xhat;
                      }
                      if (gg.needs(beta.id)) {
                        gg.grad_of(beta.id).data[static_cast<std::size_t>(i)] += gr[i];
                      }
                    }
                    if (!gg.needs(x.id)) continue;
                    real* dst = gg.grad_of(x.id).ptr() + r * d;
                    for (std::int64_t i = 0; i < d; ++i) {
                      const real xhat = (xr[i] - m) * is;
                      const real dxhat = gr[i] * gv2.data[static_cast<std::size_t>(i)];
                      dst[i] += is * (dxhat - invd * sum_dxhat - xhat * invd * sum_dxhat_xhat);
                    }
                  }
                });
}

Var softmax_xent(Graph& g, Var logits, const std::vector<int>& labels,
                 const std::vector<int>* mask, real clamp_p) {
  const Tensor& lv = g.val(logits);
  check_arg(lv.ndim() == 2, "softmax_xent: logits must be [T,C]");
  const int t = lv.shape[0], c = lv.shape[1];
  check_arg(static_cast<int>(labels.size()) == t, "softmax_xent: label count mismatch");
  check_arg(mask == nullptr || static_cast<int>(mask->size()) == t,
            "softmax_xent: mask length mismatch");

  Tensor probs({t, c});
  double denom = 0;
  double acc = 0;
  std::vector<char> keep(static_cast<std::size_t>(t), 1);
  for (int i = 0; i < t; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    check_arg(y >= 0 && y < c, "softmax_xent: label out of range");
    if (mask != nullptr && (*mask)[static_cast<std::size_t>(i)] == 0) {
      keep[static_cast<std::size_t>(i)] = 0;
    } else {
      denom += 1;
    }
    const real* row = lv.ptr() + static_cast<std::size_t>(i) * c;
    real mx = row[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double z = 0;
    for (int j = 0; j < c; ++j) z += std::exp(static_cast<double>(row[j]) - mx);
    for (int j = 0; j < c; ++j) {
      probs.at(i, j) = static_cast<real>(std::exp(static_cast<double>(row[j]) - mx) / z);
    }
    if (keep[static_cast<std::size_t>(i)]) {
      const double p = std::min<double>(1.0 - clamp_p,
                                        std::max<double>(clamp_p, probs.at(i, y)));
      acc -= std::log(p);
    }
  }
  check_arg(denom > 0, "softmax_xent: every row is masked out");
  Tensor out({1});
  out.data[0] = static_cast<real>(acc / denom);

  std::vector<int> labels_copy = labels;
  std::vector<char> keep_copy = keep;
  const real inv_denom = static_cast<real>(1.0 / denom);
  return g.make(std::move(out), {logits.id}, "softmax_xent",
                [logits, probs, labels_copy, keep_copy, inv_denom, t, c](Graph& gg, int self) {
                  if (!gg.needs(logits.id)) return;
                  const real go = gg.grad_of(self).data[0];
                  Tensor& gl = gg.grad_of(logits.id);
                  for (int i = 0; i < t; ++i) {
                    if (!keep_copy[static_cast<std::size_t>(i)]) continue;
                    const int y = labels_copy[static_cast<std::size_t>(i)];
                    for (int j = 0; j < c; ++j) {
                      const real delta = j == y ? real(1) : real(0);
                      gl.at(i, j) += go * inv_denom * (probs.at(i, j) - delta);
                    }
                  }
                });
}

}  // namespace asdkit::ag
