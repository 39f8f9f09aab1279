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

// Brute-force versions of the robustness metrics, written without reusing
// anything from robustness.cpp.

#ifndef RECON_TESTS_ORACLES_HPP_
#define RECON_TESTS_ORACLES_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "recon/robustness.hpp"

namespace recon::testing {

// Counts unit cells; boxes must have integer corners.
double grid_iou(const robust::Box& a, const robust::Box& b);

// Repeatedly takes the unused pair with the largest IoU (>= 0.5), lowest
// original index then lowest attacked index on ties.
std::vector<std::optional<std::size_t>> scan_pairing(const std::vector<robust::Box>& orig,
                                                     const std::vector<robust::Box>& attacked);

double oracle_type1(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b);
double oracle_type2(const std::vector<std::vector<robust::Box>>& orig,
                    const std::vector<std::vector<robust::Box>>& attacked);
double oracle_type3(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b);
// Uses E[x^2] - E[x]^2 moments, windows 8x8, channel-averaged.
double oracle_ssim(const rt::Tensor& a, const rt::Tensor& b, double range = 1.0);

// Original detections on a 12x12 grid and an attacked version with shifted,
// relabelled, dropped and spurious boxes.
std::vector<robust::Box> random_boxes(std::mt19937_64& rng);
std::vector<robust::Box> perturb_boxes(std::mt19937_64& rng, const std::vector<robust::Box>& in);

}  // namespace recon::testing

#endif  // RECON_TESTS_ORACLES_HPP_
