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
#include "asdkit/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace asdkit {

static_assert(std::endian::native == std::endian::little,
              "TNSR1 io assumes a little-endian host");

std::int64_t shape_numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    check_arg(d > 0, "tensor dims must be positive");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  data.assign(static_cast<std::size_t>(shape_numel(shape)), real(0));
}

Tensor::Tensor(std::vector<int> s, std::vector<real> d) : shape(std::move(s)), data(std::move(d)) {
  check_arg(shape_numel(shape) == static_cast<std::int64_t>(data.size()),
            "tensor data length does not match shape");
}

Tensor Tensor::zeros(std::vector<int> s) { return Tensor(std::move(s)); }

Tensor Tensor::full(std::vector<int> s, real v) {
  Tensor t(std::move(s));
  t.fill(v);
  return t;
}

Tensor Tensor::from(std::initializer_list<real> v) {
  Tensor t;
  t.shape = {static_cast<int>(v.size())};
  t.data.assign(v.begin(), v.end());
  return t;
}

Tensor Tensor::uniform(std::vector<int> s, real lo, real hi, Rng& rng) {
  Tensor t(std::move(s));
  for (auto& x : t.data) x = rng.uniform(static_cast<float>(lo), static_cast<float>(hi));
  return t;
}

Tensor Tensor::normal(std::vector<int> s, real mean, real stddev, Rng& rng) {
  Tensor t(std::move(s));
  for (auto& x : t.data) x = mean + stddev * rng.normal();
  return t;
}

std::int64_t Tensor::numel() const { return static_cast<std::int64_t>(data.size()); }

void Tensor::fill(real v) {
  for (auto& x : data) x = v;
}

bool Tensor::all_finite() const {
  for (real x : data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void ensure_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) {
    throw NumericError(std::string(what) + " produced a non-finite value");
  }
}

void save_tnsr(const Tensor& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  nlohmann::json header;
  header["dtype"] = "f32";
  header["shape"] = t.shape;
  header["order"] = "row-major";
  header["endian"] = "little";
  out << header.dump() << '\n';
  if constexpr (sizeof(real) == 4) {
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * 4));
  } else {
    std::vector<float> f32(t.data.begin(), t.data.end());
    out.write(reinterpret_cast<const char*>(f32.data()),
              static_cast<std::streamsize>(f32.size() * 4));
  }
  if (!out) throw IoError("short write: " + path);
}

Tensor load_tnsr(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("missing TNSR1 header: " + path);
  nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded()) throw IoError("malformed TNSR1 header: " + path);
  if (header.value("dtype", "") != "f32" || header.value("order", "") != "row-major" ||
      header.value("endian", "") != "little") {
    throw IoError("unsupported TNSR1 header fields: " + path);
  }
  std::vector<int> shape = header.at("shape").get<std::vector<int>>();
  const std::int64_t n = shape_numel(shape);
  std::vector<float> f32(static_cast<std::size_t>(n));
  in.read(reinterpret_cast<char*>(f32.data()), static_cast<std::streamsize>(n * 4));
  if (in.gcount() != static_cast<std::streamsize>(n * 4)) {
    throw IoError("truncated TNSR1 payload: " + path);
  }
  Tensor t;
  t.shape = std::move(shape);
  t.data.assign(f32.begin(), f32.end());
  return t;
}

}  // namespace asdkit
