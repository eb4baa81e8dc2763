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

#include <functional>
#include <vector>

#include "asdkit/graph.hpp"

namespace asdkit {

// Builds a scalar loss node from differentiable leaves. Must be pure: called
// repeatedly on perturbed copies of the same inputs.
using ScalarFn = std::function<ag::Var(ag::Graph&, const std::vector<ag::Var>&)>;

// Central-difference gradient verification. Perturbs each input coordinate by
// +-eps, compares (f(x+eps)-f(x-eps))/(2 eps) against the analytic gradient,
// and returns max over coordinates of |a-n| / max(|a|,|n|,rel_floor).
//
// rel_floor guards coordinates whose true gradient sits below the float32
// difference-quotient noise; harnesses working at unit gradient scale raise
// it to ~0.05 so such coordinates are judged on absolute error instead.
double grad_check(const ScalarFn& fn, const std::vector<Tensor>& inputs, real eps = real(1e-3),
                  double rel_floor = 1e-8);

}  // namespace asdkit
