#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "asdkit/tensor.hpp"
#include "doctest.h"

using namespace asdkit;

TEST_CASE("tensor shape and data stay consistent") {
  Tensor t({2, 3});
  CHECK(t.numel() == 6);
  CHECK(t.shape_str() == "[2x3]");
  t.at(1, 2) = 5.0f;
  CHECK(t.data[5] == 5.0f);

  CHECK_THROWS_AS(Tensor({2, 3}, {1.0f, 2.0f}), InvalidArgument);
  CHECK_THROWS_AS(Tensor({0, 3}), InvalidArgument);
}

TEST_CASE("finite check rejects nan and inf") {
  Tensor t({2});
  CHECK(t.all_finite());
  t.data[1] = std::numeric_limits<real>::infinity();
  CHECK(!t.all_finite());
  CHECK_THROWS_AS(ensure_finite(t, "test"), NumericError);
}

TEST_CASE("tnsr round trip is bit exact") {
  Rng rng(7);
  Tensor t = Tensor::uniform({3, 4, 5}, -2.0f, 2.0f, rng);
  const std::string path = (std::filesystem::temp_directory_path() / "asdkit_t.tnsr").string();
  save_tnsr(t, path);
  Tensor u = load_tnsr(path);
  CHECK(u.shape == t.shape);
  CHECK(u.data == t.data);
  std::remove(path.c_str());
}

TEST_CASE("tnsr header is a json first line") {
  Tensor t = Tensor::from({1.0f, 2.0f});
  const std::string path = (std::filesystem::temp_directory_path() / "asdkit_h.tnsr").string();
  save_tnsr(t, path);
  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::getline(in, line);
  CHECK(line.find("\"dtype\":\"f32\"") != std::string::npos);
  CHECK(line.find("\"order\":\"row-major\"") != std::string::npos);
  CHECK(line.find("\"endian\":\"little\"") != std::string::npos);
  in.seekg(0, std::ios::end);
  CHECK(static_cast<long>(in.tellg()) == static_cast<long>(line.size()) + 1 + 2 * 4);
  std::remove(path.c_str());
}

TEST_CASE("rng streams are reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(43);
  bool differs = false;
  Rng a2(42);
  for (int i = 0; i < 16; ++i) differs |= (a2.uniform() != c.uniform());
  CHECK(differs);
  CHECK(Rng::derive(1, 0) != Rng::derive(1, 1));
}
