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

#ifndef RECON_SIM_HPP_
#define RECON_SIM_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recon/tensor.hpp"

namespace recon::graph {

enum class DType { F32, Q8 };

struct SimTensor {
  std::int64_t id = 0;
  rt::Shape shape;
  DType dtype = DType::F32;
  std::optional<double> scale;
  std::optional<std::int64_t> zero_point;
  std::string layout;  // weight layout tag, empty for activations and biases
  std::string name;
  bool has_data = false;
  std::vector<float> f32;
  std::vector<std::uint8_t> q8;
};

struct SimOp {
  int opcode = 0;
  std::vector<std::int64_t> inputs;
  std::vector<std::int64_t> outputs;
};

struct StrippedGraph {
  std::vector<SimTensor> tensors;
  std::vector<SimOp> ops;
  std::vector<std::int64_t> inputs;
  std::vector<std::int64_t> outputs;

  const SimTensor* tensor(std::int64_t id) const;
};

/// Opcodes follow the TFLite builtin numbering for the supported families.
namespace opcode {
inline constexpr int kAdd = 0;
inline constexpr int kAveragePool2D = 1;
inline constexpr int kConcatenation = 2;
inline constexpr int kConv2D = 3;
inline constexpr int kDepthwiseConv2D = 4;
inline constexpr int kDequantize = 6;
inline constexpr int kFullyConnected = 9;
inline constexpr int kLogistic = 14;
inline constexpr int kMaxPool2D = 17;
inline constexpr int kMul = 18;
inline constexpr int kRelu = 19;
inline constexpr int kReshape = 22;
inline constexpr int kSoftmax = 25;
inline constexpr int kPad = 34;
inline constexpr int kSpaceToBatchNd = 38;
inline constexpr int kTransposeConv = 67;
inline constexpr int kResizeNearestNeighbor = 97;
inline constexpr int kMirrorPad = 100;
inline constexpr int kQuantize = 114;
}  // namespace opcode

/// Parses a manifest against its sidecar blob.
StrippedGraph parse_sim(std::string_view manifest, std::span<const std::uint8_t> blob);

/// Loads `path` and the blob named by its `blob` line (relative to it).
StrippedGraph load_sim(const std::filesystem::path& path);

struct SimFiles {
  std::string manifest;
  std::vector<std::uint8_t> blob;
};

SimFiles write_sim(const StrippedGraph& g, const std::string& blob_name);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data);

}  // namespace recon::graph

#endif  // RECON_SIM_HPP_
