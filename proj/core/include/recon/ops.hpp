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

#ifndef RECON_OPS_HPP_
#define RECON_OPS_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "recon/tensor.hpp"

namespace recon::rt {

enum class OpType {
  Conv2D,
  DepthwiseConv2D,
  Conv2DTranspose,
  MaxPooling,
  AveragePooling,
  UpSampling,
  Pad,
  MirrorPad,
  Space2Batch,
  Dense,
  Add,
  Mul,
  Concat,
  Reshape,
  ReLU,
  Sigmoid,
  Softmax,
};

std::string_view to_string(OpType op);
std::optional<OpType> op_from_string(std::string_view name);

enum class Padding { Valid, Same };

std::string_view to_string(Padding p);

using Pads = std::array<std::array<std::int64_t, 2>, 2>;  // [[top,bottom],[left,right]]

struct Attributes {
  std::int64_t filters = 0;
  std::array<std::int64_t, 2> kernel{0, 0};
  std::array<std::int64_t, 2> strides{0, 0};
  Padding padding = Padding::Valid;
  std::int64_t depth_multiplier = 0;
  std::int64_t pool_size = 0;
  std::array<std::int64_t, 2> size{0, 0};
  Pads pads{};
  std::int64_t block_size = 0;

  friend bool operator==(const Attributes&, const Attributes&) = default;
};

/// True for ops whose second input is a weight kernel.
bool has_weights(OpType op);

/// Output shape implied by attributes and input shapes. `declared` supplies
/// the target for Reshape.
Shape infer_shape(OpType op, const Attributes& a, const std::vector<Shape>& inputs,
                  const Shape& declared);

Tensor forward(OpType op, const Attributes& a, const std::vector<const Tensor*>& in,
               const Shape& out_shape);

/// Gradients for every input given the output gradient. Result has one
/// tensor per input, shaped like that input.
std::vector<Tensor> backward(OpType op, const Attributes& a,
                             const std::vector<const Tensor*>& in, const Tensor& out,
                             const Tensor& grad_out);

/// Same result as the direct Conv2D kernel via patch matrices.
Tensor conv2d_im2col(const Tensor& x, const Tensor& w, const Tensor* bias,
                     const Attributes& a);

/// Leading padding for a convolution-like window along one axis.
std::int64_t pad_before(std::int64_t in, std::int64_t k, std::int64_t s, Padding p);
std::int64_t conv_out(std::int64_t in, std::int64_t k, std::int64_t s, Padding p);
std::int64_t transpose_out(std::int64_t in, std::int64_t k, std::int64_t s, Padding p);

}  // namespace recon::rt

#endif  // RECON_OPS_HPP_
