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

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "asdkit/common.hpp"
#include "asdkit/rng.hpp"

namespace asdkit {

// Dense n-dimensional float array, row-major. The substrate of every
// computation and of the differentiation graph.
struct Tensor {
  std::vector<int> shape;
  std::vector<real> data;
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);
  Tensor(std::vector<int> s, std::vector<real> d);

  static Tensor zeros(std::vector<int> s);
  static Tensor full(std::vector<int> s, real v);
  static Tensor from(std::initializer_list<real> v);              // 1-D
  static Tensor uniform(std::vector<int> s, real lo, real hi, Rng& rng);
  static Tensor normal(std::vector<int> s, real mean, real stddev, Rng& rng);

  std::int64_t numel() const;
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape.size()); }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  real* ptr() { return data.data(); }
  const real* ptr() const { return data.data(); }

  real& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
  real operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

  // Multi-index accessors for cold paths; hot loops index data directly.
  real& at(int i0) { return data[static_cast<std::size_t>(i0)]; }
  real& at(int i0, int i1) { return data[static_cast<std::size_t>(i0) * shape[1] + i1]; }
  real& at(int i0, int i1, int i2) {
    return data[(static_cast<std::size_t>(i0) * shape[1] + i1) * shape[2] + i2];
  }
  real& at(int i0, int i1, int i2, int i3) {
    return data[((static_cast<std::size_t>(i0) * shape[1] + i1) * shape[2] + i2) * shape[3] + i3];
  }
  real at(int i0) const { return data[static_cast<std::size_t>(i0)]; }
  real at(int i0, int i1) const { return data[static_cast<std::size_t>(i0) * shape[1] + i1]; }
  real at(int i0, int i1, int i2) const {
    return data[(static_cast<std::size_t>(i0) * shape[1] + i1) * shape[2] + i2];
  }
  real at(int i0, int i1, int i2, int i3) const {
    return data[((static_cast<std::size_t>(i0) * shape[1] + i1) * shape[2] + i2) * shape[3] + i3];
  }

  void fill(real v);
  bool all_finite() const;
  std::string shape_str() const;
};

std::int64_t shape_numel(const std::vector<int>& shape);

// Throws NumericError when `t` contains NaN or Inf. `what` names the
// producing operation in the message.
void ensure_finite(const Tensor& t, const char* what);

// --- TNSR1 container ---------------------------------------------------
// Line 1: JSON header {"dtype":"f32","shape":[...],"order":"row-major",
// "endian":"little"} terminated by '\n'; then product(shape) little-endian
// f32 values. Used for checkpoints and test fixtures.
void save_tnsr(const Tensor& t, const std::string& path);
Tensor load_tnsr(const std::string& path);

}  // namespace asdkit
