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

#ifndef RECON_REBUILD_HPP_
#define RECON_REBUILD_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recon/ops.hpp"
#include "recon/sim.hpp"
#include "recon/tensor.hpp"

namespace recon::graph {

struct GraphNode {
  enum class Kind { Input, Parameter, Operator };
  Kind kind = Kind::Operator;
  std::string name;
  rt::Shape shape;  // output shape (or parameter shape)
  // Parameter
  rt::Tensor value;
  std::string layout;  // source layout until normalized, then canonical
  // Operator
  rt::OpType op = rt::OpType::ReLU;
  rt::Attributes attrs;
  bool complete = false;
  std::vector<std::size_t> inputs;

  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

/// Nodes are ordered inputs, parameters, then operators in topological order.
struct ComputationalGraph {
  std::vector<GraphNode> nodes;
  std::vector<std::size_t> inputs;
  std::vector<std::size_t> outputs;

  std::size_t find(std::string_view name) const;  // throws if absent
  friend bool operator==(const ComputationalGraph&, const ComputationalGraph&) = default;
};

/// Builds nodes and wiring; parameters are dequantized but attributes unset.
ComputationalGraph extract_structure(const StrippedGraph& sg);

/// Attribute completion from observed shapes. `weight_shape` uses the deployment layout
/// ([out, kh, kw, in] or [1, kh, kw, ch*mult]); empty for weightless ops.
rt::Attributes complete_attributes(rt::OpType op, const rt::Shape& input_shape,
                                   const rt::Shape& output_shape, const rt::Shape& weight_shape);

/// v = s * (q - z), exact in f64.
rt::Tensor dequantize(std::span<const std::uint8_t> q, const rt::Shape& shape, double scale,
                      std::int64_t zero_point);

enum class WeightFamily { Conv, Depthwise, Transpose, Dense };

/// Permutes to canonical layouts: conv [kh,kw,in,out], depthwise
/// [kh,kw,ch,mult], transpose [kh,kw,out,in], dense [in,out].
rt::Tensor normalize_weight_axes(const rt::Tensor& t, std::string_view layout, WeightFamily family,
                                 std::int64_t in_channels = 0);

std::string_view canonical_layout(WeightFamily family);

/// extract_structure, then axis normalization, attribute completion and the
/// shape consistency check.
ComputationalGraph rebuild(const StrippedGraph& sg);

/// Re-derives every operator's output shape; throws InconsistentShapes.
void check_consistency(const ComputationalGraph& g);

double round_half_away(double x);

int opcode_of(rt::OpType op);

enum class Quantization { None, Q8 };

/// Inverse of rebuild: a stripped graph in deployment layouts with
/// attributes removed. Used to produce fixtures and round-trip tests.
StrippedGraph strip(const ComputationalGraph& g, Quantization quant = Quantization::None);

}  // namespace recon::graph

#endif  // RECON_REBUILD_HPP_
