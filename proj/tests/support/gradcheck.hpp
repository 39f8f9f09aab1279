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

// Finite-difference gradient checks for the runtime ops.

#ifndef RECON_TESTS_GRADCHECK_HPP_
#define RECON_TESTS_GRADCHECK_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "recon/ops.hpp"

namespace recon::testing {

struct OpCase {
  rt::Attributes attrs;
  std::vector<rt::Tensor> inputs;
  rt::Shape out_shape;
  std::string describe;
};

// A random, well-conditioned instance of `op`: max-pool windows have no
// near-ties and ReLU inputs stay away from zero.
OpCase random_case(rt::OpType op, std::mt19937_64& rng);

struct GradCheck {
  int cases = 0;
  double worst = 0.0;  // largest norm-wise relative error over inputs and cases
  std::string worst_case;
};

// Compares backward() against central differences of sum(r * forward(x)).
GradCheck check_gradients(rt::OpType op, std::uint64_t seed, int cases = 5, double h = 1e-5);

const std::vector<rt::OpType>& all_ops();

}  // namespace recon::testing

#endif  // RECON_TESTS_GRADCHECK_HPP_
