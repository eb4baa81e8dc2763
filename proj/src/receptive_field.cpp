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
#include "asdkit/receptive_field.hpp"

namespace asdkit {

int compute_receptive_field(const std::vector<LayerSpec>& specs) {
  long long rf = 1;
  long long jump = 1;
  for (const LayerSpec& s : specs) {
    check_arg(s.kernel_size >= 1 && s.stride >= 1 && s.dilation >= 1, "LayerSpec fields must be >= 1");
    rf += static_cast<long long>(s.kernel_size - 1) * s.dilation * jump;
    jump *= s.stride;
  }
  return static_cast<int>(rf);
}

int stack_out_len(const std::vector<LayerSpec>& specs, int in_len) {
  int len = in_len;
  for (const LayerSpec& s : specs) {
    const int span = s.dilation * (s.kernel_size - 1) + 1;
    check_arg(len + 2 * s.padding >= span, "stack_out_len: input too short for layer");
    len = (len + 2 * s.padding - span) / s.stride + 1;
  }
  return len;
}

IndexRange affected_interval(const std::vector<LayerSpec>& specs, int in_len, int lo, int hi) {
  IndexRange r{lo, hi};
  int len = in_len;
  for (const LayerSpec& s : specs) {
    if (r.empty()) return r;
    const int span = s.dilation * (s.kernel_size - 1) + 1;
    const int out_len = (len + 2 * s.padding - span) / s.stride + 1;
    // Output o reads inputs {o*stride - pad + k*dilation : k in [0,K)}. It is
    // affected when that window intersects [r.lo, r.hi]:
    //   o*stride - pad <= r.hi  and  o*stride - pad + (K-1)*d >= r.lo
    int olo = r.lo - (s.kernel_size - 1) * s.dilation + s.padding;
    olo = olo <= 0 ? 0 : (olo + s.stride - 1) / s.stride;
    int ohi = (r.hi + s.padding) / s.stride;
    if (ohi > out_len - 1) ohi = out_len - 1;
    if (olo < 0) olo = 0;
    r = {olo, ohi};
    len = out_len;
  }
  return r;
}

}  // namespace asdkit
