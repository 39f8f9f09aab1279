// Copyright 2026 The Recon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "recon/tensor.hpp"

#include <cmath>

#include "recon/error.hpp"

namespace recon::rt {

std::int64_t numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::string format_shape(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out;
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)) {
  for (auto d : shape)
    if (d < 1) fail(ErrorKind::ShapeMismatch, "tensor extents must be >= 1: " + format_shape(shape));
  data.assign(static_cast<std::size_t>(numel(shape)), fill);
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (static_cast<std::int64_t>(data.size()) != numel(shape))
    fail(ErrorKind::ShapeMismatch, "data length " + std::to_string(data.size()) +
                                       " does not match shape " + format_shape(shape));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape)
    fail(ErrorKind::ShapeMismatch, format_shape(a.shape) + " vs " + format_shape(b.shape));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace recon::rt
