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
#include <vector>

#include "asdkit/grad_check.hpp"

namespace asdkit {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
};

// Finite-difference verification of every differentiable op plus the
// composed fusion+classifier path on short random sequences, `seeds` draws
// each. Returns the worst error per op family.
std::vector<GradCheckEntry> run_grad_check_suite(int seeds, int workers = 2);

}  // namespace asdkit
