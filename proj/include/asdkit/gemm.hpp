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

#include "asdkit/common.hpp"

namespace asdkit {

// Row-major matrix products. `accumulate=false` overwrites C, otherwise C +=.
// These three cover every transpose pattern the graph ops need without
// materializing transposed copies.

// C[M,N] = A[M,K] * B[K,N]
void gemm_nn(int m, int n, int k, const real* a, const real* b, real* c, bool accumulate);

// C[M,N] = A[M,K] * B[N,K]^T
void gemm_nt(int m, int n, int k, const real* a, const real* b, real* c, bool accumulate);

// C[M,N] = A[K,M]^T * B[K,N]
void gemm_tn(int m, int n, int k, const real* a, const real* b, real* c, bool accumulate);

}  // namespace asdkit
