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

#include "recon/rebuild.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "recon/error.hpp"

namespace recon::graph {

using rt::OpType;
using rt::Padding;
using rt::Shape;
using rt::Tensor;

std::size_t ComputationalGraph::find(std::string_view name) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].name == name) return i;
  fail(ErrorKind::MalformedFile, "no graph node named '" + std::string(name) + "'");
}

double round_half_away(double x) {
  return x < 0 ? -std::floor(-x + 0.5) : std::floor(x + 0.5);
}

namespace {

struct OpcodeEntry {
  int code;
  OpType op;
};

constexpr OpcodeEntry kOpcodes[] = {
    {opcode::kAdd, OpType::Add},
    {opcode::kAveragePool2D, OpType::AveragePooling},
    {opcode::kConcatenation, OpType::Concat},
    {opcode::kConv2D, OpType::Conv2D},
    {opcode::kDepthwiseConv2D, OpType::DepthwiseConv2D},
    {opcode::kFullyConnected, OpType::Dense},
    {opcode::kLogistic, OpType::Sigmoid},
    {opcode::kMaxPool2D, OpType::MaxPooling},
    {opcode::kMul, OpType::Mul},
    {opcode::kRelu, OpType::ReLU},
    {opcode::kReshape, OpType::Reshape},
    {opcode::kSoftmax, OpType::Softmax},
    {opcode::kPad, OpType::Pad},
    {opcode::kSpaceToBatchNd, OpType::Space2Batch},
    {opcode::kTransposeConv, OpType::Conv2DTranspose},
    {opcode::kResizeNearestNeighbor, OpType::UpSampling},
    {opcode::kMirrorPad, OpType::MirrorPad},
};

bool inference_only(int code) { return code == opcode::kDequantize || code == opcode::kQuantize; }

std::string tname(std::int64_t id) { return "t" + std::to_string(id); }

[[noreturn]] void inconsistent(OpType op, const std::string& msg) {
  fail(ErrorKind::InconsistentShapes, std::string(rt::to_string(op)) + ": " + msg);
}

// Output shape [b, out, out, c] position i maps to weight position.
std::int64_t conv_stride(std::int64_t in, std::int64_t k, std::int64_t out) {
  if (out == 1) return in == k ? 1 : std::max<std::int64_t>(in, 1);
  const auto s = static_cast<std::int64_t>(
      round_half_away(static_cast<double>(in - k) / static_cast<double>(out - 1)));
  return std::max<std::int64_t>(s, 1);
}

std::int64_t transpose_stride(std::int64_t in, std::int64_t k, std::int64_t out) {
  if (in == 1) return std::max<std::int64_t>(out, 1);
  const auto s = static_cast<std::int64_t>(
      round_half_away(static_cast<double>(out - k) / static_cast<double>(in - 1)));
  return std::max<std::int64_t>(s, 1);
}

Tensor permute(const Tensor& t, const std::vector<std::size_t>& perm) {
  Shape out_shape(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) out_shape[k] = t.shape[perm[k]];
  Tensor out(out_shape);
  const std::size_t rank = perm.size();
  std::vector<std::int64_t> in_stride(rank, 1);
  for (std::size_t k = rank - 1; k > 0; --k) in_stride[k - 1] = in_stride[k] * t.shape[k];
  std::vector<std::int64_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::int64_t src = 0;
    for (std::size_t k = 0; k < rank; ++k) src += idx[k] * in_stride[perm[k]];
    out[flat] = t[static_cast<std::size_t>(src)];
    for (std::size_t k = rank; k-- > 0;) {
      if (++idx[k] < out_shape[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}

}  // namespace

int opcode_of(OpType op) {
  for (const auto& e : kOpcodes)
    if (e.op == op) return e.code;
  fail(ErrorKind::UnsupportedOp, "no opcode for " + std::string(rt::to_string(op)));
}

Tensor dequantize(std::span<const std::uint8_t> q, const Shape& shape, double scale,
                  std::int64_t zero_point) {
  Tensor out(shape);
  if (q.size() != out.size()) fail(ErrorKind::ShapeMismatch, "q8 payload does not match shape");
  for (std::size_t i = 0; i < q.size(); ++i)
    out[i] = scale * static_cast<double>(static_cast<std::int64_t>(q[i]) - zero_point);
  return out;
}

std::string_view canonical_layout(WeightFamily family) {
  switch (family) {
    case WeightFamily::Conv: return "HWIO";
    case WeightFamily::Depthwise: return "HWCM";
    case WeightFamily::Transpose: return "HWOI";
    case WeightFamily::Dense: return "IO";
  }
  return "";
}

Tensor normalize_weight_axes(const Tensor& t, std::string_view layout, WeightFamily family,
                             std::int64_t in_channels) {
  auto need_rank = [&](std::size_t r) {
    if (t.shape.size() != r)
      fail(ErrorKind::UnknownLayout, "layout " + std::string(layout) + " needs rank " +
                                         std::to_string(r) + ", got " + rt::format_shape(t.shape));
  };
  if (layout == canonical_layout(family)) {
    need_rank(family == WeightFamily::Dense ? 2 : 4);
    return t;
  }
  switch (family) {
    case WeightFamily::Conv:
      need_rank(4);
      if (layout == "OHWI") return permute(t, {1, 2, 3, 0});
      if (layout == "OIHW") return permute(t, {2, 3, 1, 0});
      break;
    case WeightFamily::Depthwise:
      need_rank(4);
      if (layout == "1HWC") {
        if (t.shape[0] != 1) fail(ErrorKind::UnknownLayout, "1HWC kernel must have leading 1");
        if (in_channels < 1 || t.shape[3] % in_channels)
          fail(ErrorKind::NonIntegerMultiplier,
               "depthwise kernel channels " + std::to_string(t.shape[3]) +
                   " not a multiple of input channels " + std::to_string(in_channels));
        return Tensor({t.shape[1], t.shape[2], in_channels, t.shape[3] / in_channels}, t.data);
      }
      break;
    case WeightFamily::Transpose:
      need_rank(4);
      if (layout == "OHWI") return permute(t, {1, 2, 0, 3});
      break;
    case WeightFamily::Dense:
      need_rank(2);
      if (layout == "OI") return permute(t, {1, 0});
      break;
  }
  fail(ErrorKind::UnknownLayout, "unknown weight layout '" + std::string(layout) + "'");
}

rt::Attributes complete_attributes(OpType op, const Shape& in, const Shape& out, const Shape& w) {
  rt::Attributes a;
  auto need4 = [&](const Shape& s, const char* what) {
    if (s.size() != 4) inconsistent(op, std::string(what) + " shape must be rank 4");
  };
  switch (op) {
    case OpType::Conv2D:
    case OpType::DepthwiseConv2D: {
      need4(in, "input");
      need4(out, "output");
      need4(w, "weight");
      a.filters = out[3];
      a.kernel = {w[1], w[2]};
      for (int i = 0; i < 2; ++i) a.strides[i] = conv_stride(in[1 + i], a.kernel[i], out[1 + i]);
      auto fits = [&](Padding p) {
        for (int i = 0; i < 2; ++i)
          if (rt::conv_out(in[1 + i], a.kernel[i], a.strides[i], p) != out[1 + i]) return false;
        return true;
      };
      if (fits(Padding::Valid)) a.padding = Padding::Valid;
      else if (fits(Padding::Same)) a.padding = Padding::Same;
      else inconsistent(op, "neither padding mode reproduces output " + rt::format_shape(out));
      if (op == OpType::DepthwiseConv2D) {
        if (out[3] % in[3])
          fail(ErrorKind::NonIntegerMultiplier, "DepthwiseConv2D: output channels " +
                                                    std::to_string(out[3]) + " / input channels " +
                                                    std::to_string(in[3]));
        a.depth_multiplier = out[3] / in[3];
      }
      return a;
    }
    case OpType::Conv2DTranspose: {
      need4(in, "input");
      need4(out, "output");
      need4(w, "weight");
      a.filters = out[3];
      a.kernel = {w[1], w[2]};
      for (int i = 0; i < 2; ++i)
        a.strides[i] = transpose_stride(in[1 + i], a.kernel[i], out[1 + i]);
      auto fits = [&](Padding p) {
        for (int i = 0; i < 2; ++i)
          if (rt::transpose_out(in[1 + i], a.kernel[i], a.strides[i], p) != out[1 + i]) return false;
        return true;
      };
      if (fits(Padding::Valid)) a.padding = Padding::Valid;
      else if (fits(Padding::Same)) a.padding = Padding::Same;
      else inconsistent(op, "neither padding mode reproduces output " + rt::format_shape(out));
      return a;
    }
    case OpType::MaxPooling:
    case OpType::AveragePooling: {
      need4(in, "input");
      need4(out, "output");
      a.pool_size = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(round_half_away(static_cast<double>(in[1]) /
                                                       static_cast<double>(out[1]))));
      constexpr double kEps = 1e-9;
      bool same = true;
      for (int i = 1; i <= 2; ++i)
        if (!(std::floor(static_cast<double>(in[i]) / (static_cast<double>(a.pool_size) + kEps)) <
              static_cast<double>(out[i])))
          same = false;
      auto fits = [&](Padding p) {
        for (int i = 1; i <= 2; ++i)
          if (rt::conv_out(in[i], a.pool_size, a.pool_size, p) != out[i]) return false;
        return true;
      };
      a.padding = same ? Padding::Same : Padding::Valid;
      if (!fits(a.padding)) {
        const Padding other = same ? Padding::Valid : Padding::Same;
        if (!fits(other)) inconsistent(op, "pool_size " + std::to_string(a.pool_size) +
                                               " cannot produce " + rt::format_shape(out));
        a.padding = other;
      }
      return a;
    }
    case OpType::UpSampling:
      need4(in, "input");
      need4(out, "output");
      for (int i = 0; i < 2; ++i) {
        a.size[i] = out[1 + i] / in[1 + i];
        if (a.size[i] < 1 || a.size[i] * in[1 + i] != out[1 + i])
          inconsistent(op, "output is not an integer multiple of the input");
      }
      return a;
    case OpType::Pad:
    case OpType::MirrorPad:
      need4(in, "input");
      need4(out, "output");
      for (int i = 0; i < 2; ++i) {
        const auto diff = out[1 + i] - in[1 + i];
        if (diff < 0) inconsistent(op, "output smaller than input");
        a.pads[i] = {diff / 2, diff - diff / 2};
      }
      return a;
    case OpType::Space2Batch: {
      need4(in, "input");
      need4(out, "output");
      if (in[0] != 1) inconsistent(op, "block size inference needs batch-1 input");
      auto b = static_cast<std::int64_t>(std::sqrt(static_cast<double>(out[0])));
      while (b * b > out[0]) --b;
      while ((b + 1) * (b + 1) <= out[0]) ++b;
      if (b * b != out[0]) inconsistent(op, "output batch is not a square block count");
      a.block_size = b;
      for (int i = 0; i < 2; ++i) {
        const auto total = out[1 + i] * b - in[1 + i];
        if (total < 0) inconsistent(op, "output too small for the input");
        a.pads[i] = {total / 2, total - total / 2};
      }
      return a;
    }
    default:
      return a;
  }
}

ComputationalGraph extract_structure(const StrippedGraph& sg) {
  // Inference-only conversions are dropped by aliasing their output.
  std::map<std::int64_t, std::int64_t> alias;
  auto resolve = [&](std::int64_t id) {
    for (auto it = alias.find(id); it != alias.end(); it = alias.find(id)) id = it->second;
    return id;
  };
  std::vector<const SimOp*> ops;
  for (const auto& op : sg.ops) {
    if (inference_only(op.opcode)) {
      if (op.inputs.size() != 1 || op.outputs.size() != 1)
        fail(ErrorKind::MalformedFile, "quantize/dequantize op must be unary");
      alias[op.outputs[0]] = op.inputs[0];
      continue;
    }
    if (std::none_of(std::begin(kOpcodes), std::end(kOpcodes),
                     [&](const OpcodeEntry& e) { return e.code == op.opcode; }))
      fail(ErrorKind::UnknownOpcode, "unknown opcode " + std::to_string(op.opcode));
    if (op.outputs.size() != 1)
      fail(ErrorKind::MalformedFile, "operators must have exactly one output");
    ops.push_back(&op);
  }

  ComputationalGraph g;
  std::map<std::int64_t, std::size_t> node_of;
  for (auto id : sg.inputs) {
    id = resolve(id);
    const SimTensor* t = sg.tensor(id);
    GraphNode n;
    n.kind = GraphNode::Kind::Input;
    n.name = tname(id);
    n.shape = t->shape;
    node_of[id] = g.nodes.size();
    g.inputs.push_back(g.nodes.size());
    g.nodes.push_back(std::move(n));
  }
  std::set<std::int64_t> consumed;
  for (const SimOp* op : ops)
    for (auto id : op->inputs) consumed.insert(resolve(id));
  for (const auto& t : sg.tensors) {
    if (!t.has_data || !consumed.count(t.id) || node_of.count(t.id)) continue;
    GraphNode n;
    n.kind = GraphNode::Kind::Parameter;
    n.name = tname(t.id);
    n.shape = t.shape;
    n.layout = t.layout;
    if (t.dtype == DType::Q8) {
      n.value = dequantize(t.q8, t.shape, *t.scale, *t.zero_point);
      for (auto& v : n.value.data) v = static_cast<float>(v);  // parameters are f32
    } else {
      n.value = Tensor(t.shape, std::vector<double>(t.f32.begin(), t.f32.end()));
    }
    node_of[t.id] = g.nodes.size();
    g.nodes.push_back(std::move(n));
  }

  // Topological order over operators.
  std::map<std::int64_t, std::size_t> producer;
  for (std::size_t k = 0; k < ops.size(); ++k) {
    const auto out = ops[k]->outputs[0];
    if (producer.count(out) || node_of.count(out))
      fail(ErrorKind::MalformedFile, "tensor " + std::to_string(out) + " is defined twice");
    producer[out] = k;
  }
  std::vector<std::size_t> indeg(ops.size(), 0);
  std::vector<std::vector<std::size_t>> users(ops.size());
  for (std::size_t k = 0; k < ops.size(); ++k)
    for (auto id : ops[k]->inputs) {
      id = resolve(id);
      if (auto p = producer.find(id); p != producer.end()) {
        ++indeg[k];
        users[p->second].push_back(k);
      } else if (!node_of.count(id)) {
        fail(ErrorKind::DanglingTensor, "tensor " + std::to_string(id) + " has no producer");
      }
    }
  std::vector<std::size_t> ready;
  for (std::size_t k = ops.size(); k-- > 0;)
    if (indeg[k] == 0) ready.push_back(k);
  std::size_t placed = 0;
  while (!ready.empty()) {
    // Lowest manifest position first keeps the order stable.
    auto it = std::min_element(ready.begin(), ready.end());
    const std::size_t k = *it;
    ready.erase(it);
    const SimOp& op = *ops[k];
    GraphNode n;
    n.kind = GraphNode::Kind::Operator;
    n.name = tname(op.outputs[0]);
    n.shape = sg.tensor(op.outputs[0])->shape;
    for (const auto& e : kOpcodes)
      if (e.code == op.opcode) n.op = e.op;
    for (auto id : op.inputs) n.inputs.push_back(node_of.at(resolve(id)));
    node_of[op.outputs[0]] = g.nodes.size();
    g.nodes.push_back(std::move(n));
    ++placed;
    for (std::size_t u : users[k])
      if (--indeg[u] == 0) ready.push_back(u);
  }
  if (placed != ops.size()) fail(ErrorKind::CycleDetected, "operator graph contains a cycle");
  for (auto id : sg.outputs) {
    auto it = node_of.find(resolve(id));
    if (it == node_of.end())
      fail(ErrorKind::DanglingTensor, "graph output " + std::to_string(id) + " is never produced");
    g.outputs.push_back(it->second);
  }
  return g;
}

namespace {

WeightFamily family_of(OpType op) {
  switch (op) {
    case OpType::Conv2D: return WeightFamily::Conv;
    case OpType::DepthwiseConv2D: return WeightFamily::Depthwise;
    case OpType::Conv2DTranspose: return WeightFamily::Transpose;
    default: return WeightFamily::Dense;
  }
}

// Canonical kernel shape back to the deployment layout the completion rules index.
Shape deployment_shape(OpType op, const Shape& w) {
  switch (op) {
    case OpType::Conv2D: return {w[3], w[0], w[1], w[2]};
    case OpType::DepthwiseConv2D: return {1, w[0], w[1], w[2] * w[3]};
    case OpType::Conv2DTranspose: return {w[2], w[0], w[1], w[3]};
    default: return w;
  }
}

}  // namespace

void check_consistency(const ComputationalGraph& g) {
  for (const auto& n : g.nodes) {
    if (n.kind != GraphNode::Kind::Operator) continue;
    std::vector<Shape> ins;
    for (auto i : n.inputs) ins.push_back(g.nodes[i].shape);
    Shape derived;
    try {
      derived = rt::infer_shape(n.op, n.attrs, ins, n.shape);
    } catch (const Error& e) {
      fail(ErrorKind::InconsistentShapes, "op " + n.name + " (" + std::string(rt::to_string(n.op)) +
                                              "): " + e.detail());
    }
    if (derived != n.shape)
      fail(ErrorKind::InconsistentShapes,
           "op " + n.name + " (" + std::string(rt::to_string(n.op)) + ") derives " +
               rt::format_shape(derived) + " but records " + rt::format_shape(n.shape));
  }
}

ComputationalGraph rebuild(const StrippedGraph& sg) {
  ComputationalGraph g = extract_structure(sg);
  std::map<std::size_t, WeightFamily> normalized;
  for (auto& n : g.nodes) {
    if (n.kind != GraphNode::Kind::Operator) continue;
    if (n.inputs.empty()) fail(ErrorKind::InconsistentShapes, "op " + n.name + " has no inputs");
    const Shape in = g.nodes[n.inputs[0]].shape;
    Shape weight;
    if (rt::has_weights(n.op)) {
      if (n.inputs.size() < 2 || g.nodes[n.inputs[1]].kind != GraphNode::Kind::Parameter)
        fail(ErrorKind::InconsistentShapes, "op " + n.name + " needs a constant kernel");
      const std::size_t wi = n.inputs[1];
      const WeightFamily fam = family_of(n.op);
      auto& wn = g.nodes[wi];
      if (auto it = normalized.find(wi); it == normalized.end()) {
        wn.value = normalize_weight_axes(wn.value, wn.layout, fam, in.empty() ? 0 : in.back());
        wn.shape = wn.value.shape;
        wn.layout = std::string(canonical_layout(fam));
        normalized.emplace(wi, fam);
      } else if (it->second != fam) {
        fail(ErrorKind::UnknownLayout, "kernel " + wn.name + " shared across op families");
      }
      weight = deployment_shape(n.op, wn.shape);
    }
    n.attrs = complete_attributes(n.op, in, n.shape, weight);
    n.complete = true;
  }
  check_consistency(g);
  return g;
}

StrippedGraph strip(const ComputationalGraph& g, Quantization quant) {
  StrippedGraph sg;
  auto next_id = static_cast<std::int64_t>(g.nodes.size());
  std::map<std::size_t, std::int64_t> feed;  // node -> tensor id consumers read
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& n = g.nodes[i];
    SimTensor t;
    t.id = static_cast<std::int64_t>(i);
    t.shape = n.shape;
    t.name = n.name;
    feed[i] = t.id;
    if (n.kind == GraphNode::Kind::Parameter) {
      // Find the consuming family to pick the deployment layout.
      std::optional<OpType> user;
      for (const auto& m : g.nodes)
        if (m.kind == GraphNode::Kind::Operator && m.inputs.size() > 1 && m.inputs[1] == i &&
            rt::has_weights(m.op))
          user = m.op;
      Tensor v = n.value;
      if (user) {
        switch (*user) {
          case OpType::Conv2D: v = permute(v, {3, 0, 1, 2}); t.layout = "OHWI"; break;
          case OpType::DepthwiseConv2D:
            v = Tensor({1, v.shape[0], v.shape[1], v.shape[2] * v.shape[3]}, v.data);
            t.layout = "1HWC";
            break;
          case OpType::Conv2DTranspose: v = permute(v, {2, 0, 1, 3}); t.layout = "OHWI"; break;
          default: v = permute(v, {1, 0}); t.layout = "OI"; break;
        }
      }
      t.shape = v.shape;
      if (quant == Quantization::Q8 && user) {
        const auto [lo_it, hi_it] = std::minmax_element(v.data.begin(), v.data.end());
        const double lo = std::min(0.0, *lo_it), hi = std::max(0.0, *hi_it);
        const double scale = hi > lo ? (hi - lo) / 255.0 : 1.0;
        const auto zero = static_cast<std::int64_t>(
            std::clamp(round_half_away(-lo / scale), 0.0, 255.0));
        SimTensor q = t;
        q.id = next_id++;
        q.dtype = DType::Q8;
        q.scale = scale;
        q.zero_point = zero;
        q.has_data = true;
        for (double x : v.data)
          q.q8.push_back(static_cast<std::uint8_t>(
              std::clamp(round_half_away(x / scale) + static_cast<double>(zero), 0.0, 255.0)));
        t.layout.clear();
        sg.ops.push_back({opcode::kDequantize, {q.id}, {t.id}});
        sg.tensors.push_back(std::move(q));
      } else {
        t.has_data = true;
        t.f32.assign(v.data.begin(), v.data.end());
      }
    }
    sg.tensors.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& n = g.nodes[i];
    if (n.kind != GraphNode::Kind::Operator) continue;
    SimOp op;
    op.opcode = opcode_of(n.op);
    for (auto in : n.inputs) op.inputs.push_back(feed.at(in));
    op.outputs.push_back(static_cast<std::int64_t>(i));
    sg.ops.push_back(std::move(op));
  }
  for (auto i : g.inputs) sg.inputs.push_back(static_cast<std::int64_t>(i));
  for (auto o : g.outputs) sg.outputs.push_back(static_cast<std::int64_t>(o));
  std::sort(sg.tensors.begin(), sg.tensors.end(),
            [](const SimTensor& a, const SimTensor& b) { return a.id < b.id; });
  return sg;
}

}  // namespace recon::graph
