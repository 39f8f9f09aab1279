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

#ifndef RECON_MBUILD_HPP_
#define RECON_MBUILD_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recon/rebuild.hpp"
#include "recon/tensor.hpp"

namespace recon::graph {

// Trainable-model build script (MBUILD v1) plus a named-tensor weights container.
struct ModelArtifacts {
  std::string script;
  std::vector<std::uint8_t> weights;
};

ModelArtifacts generate_model(const ComputationalGraph& g);

// Inverse of generate_model. Parameters are rounded to f32 in the container.
ComputationalGraph load_model(std::string_view script, std::span<const std::uint8_t> weights);

ComputationalGraph load_model_files(const std::filesystem::path& script_path,
                                    const std::filesystem::path& weights_path);

using NamedTensors = std::vector<std::pair<std::string, rt::Tensor>>;

std::vector<std::uint8_t> write_weights(const NamedTensors& tensors);
NamedTensors read_weights(std::span<const std::uint8_t> bytes);

}  // namespace recon::graph

#endif  // RECON_MBUILD_HPP_
