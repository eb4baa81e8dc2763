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
#include "asdkit/gemm.hpp"

#include <cstring>
#include <vector>

namespace asdkit {

void gemm_nn(int m, int n, int k, const real* a, const real* b, real* c, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    real* crow = c + static_cast<std::size_t>(i) * n;
    if (!accumulate) std::memset(crow, 0, sizeof(real) * static_cast<std::size_t>(n));
    const real* arow = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const real av = arow[p];
      if (av == real(0)) continue;
      const real* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(int m, int n, int k, const real* a, const real* b, real* c, bool accumulate) {
  // Strict-FP dot-product reductions do not vectorize; transposing B once and
  // reusing the broadcast-axpy kernel is far faster for every non-tiny m.
  thread_local std::vector<real> scratch;
  scratch.resize(static_cast<std::size_t>(k) * n);
  for (int j = 0; j < n; ++j) {
    const real* brow = b + static_cast<std::size_t>(j) * k;
    for (int p = 0; p < k; ++p) scratch[static_cast<std::size_t>(p) * n + j] = brow[p];
  }
  gemm_nn(m, n, k, a, scratch.data(), c, accumulate);
}

void gemm_tn(int m, int n, int k, const real* a, const real* b, real* c, bool accumulate) {
  if (!accumulate) std::memset(c, 0, sizeof(real) * static_cast<std::size_t>(m) * n);
  for (int p = 0; p < k; ++p) {
    const real* arow = a + static_cast<std::size_t>(p) * m;
    const real* brow = b + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const real av = arow[i];
      if (av == real(0)) continue;
      real* crow = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace asdkit
