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

#include "recon/mbuild.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <map>
#include <sstream>

#include "recon/error.hpp"
#include "recon/sim.hpp"

namespace recon::graph {

using rt::OpType;
using rt::Shape;
using rt::Tensor;

namespace {

constexpr char kMagic[4] = {'R', 'W', 'T', 'S'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint64_t uint(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return b_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) fail(ErrorKind::MalformedFile, "weights container truncated");
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::string join_ints(std::span<const std::int64_t> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string attr_text(OpType op, const rt::Attributes& a) {
  std::ostringstream os;
  auto pair = [](const std::array<std::int64_t, 2>& p) {
    return std::to_string(p[0]) + "," + std::to_string(p[1]);
  };
  auto pads = [](const rt::Pads& p) {
    return std::to_string(p[0][0]) + "," + std::to_string(p[0][1]) + "," +
           std::to_string(p[1][0]) + "," + std::to_string(p[1][1]);
  };
  switch (op) {
    case OpType::Conv2D:
    case OpType::DepthwiseConv2D:
    case OpType::Conv2DTranspose:
      os << " filters=" << a.filters << " kernel=" << pair(a.kernel)
         << " strides=" << pair(a.strides) << " padding=" << rt::to_string(a.padding);
      if (op == OpType::DepthwiseConv2D) os << " depth_multiplier=" << a.depth_multiplier;
      break;
    case OpType::MaxPooling:
    case OpType::AveragePooling:
      os << " pool_size=" << a.pool_size << " padding=" << rt::to_string(a.padding);
      break;
    case OpType::UpSampling: os << " size=" << pair(a.size); break;
    case OpType::Pad:
    case OpType::MirrorPad: os << " pads=" << pads(a.pads); break;
    case OpType::Space2Batch: os << " block_size=" << a.block_size << " pads=" << pads(a.pads); break;
    default: break;
  }
  return os.str();
}

std::vector<std::int64_t> parse_ints(std::string_view s, int line) {
  std::vector<std::int64_t> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    const auto tok = s.substr(0, comma);
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size())
      throw ParseError(ErrorKind::MalformedFile, line, 1, "bad integer list '" + std::string(s) + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

std::vector<std::string> words(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> w;
  for (std::string t; is >> t;) w.push_back(t);
  return w;
}

}  // namespace

std::vector<std::uint8_t> write_weights(const NamedTensors& tensors) {
  std::vector<std::uint8_t> index;
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    put_u32(index, static_cast<std::uint32_t>(name.size()));
    index.insert(index.end(), name.begin(), name.end());
    put_u32(index, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put_u64(index, static_cast<std::uint64_t>(d));
    put_u64(index, offset);
    offset += 4 * t.size();
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  out.insert(out.end(), index.begin(), index.end());
  for (const auto& [name, t] : tensors)
    for (double v : t.data) {
      const float f = static_cast<float>(v);
      std::uint32_t bits = 0;
      std::memcpy(&bits, &f, 4);
      put_u32(out, bits);
    }
  return out;
}

NamedTensors read_weights(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(4) != std::string(kMagic, 4)) fail(ErrorKind::MalformedFile, "not a weights container");
  if (r.uint(4) != kVersion) fail(ErrorKind::MalformedFile, "unsupported weights container version");
  const auto count = r.uint(4);
  struct Entry {
    std::string name;
    Shape shape;
    std::uint64_t offset;
  };
  std::vector<Entry> entries;
  for (std::uint64_t i = 0; i < count; ++i) {
    Entry e;
    e.name = r.str(r.uint(4));
    const auto rank = r.uint(4);
    for (std::uint64_t k = 0; k < rank; ++k) e.shape.push_back(static_cast<std::int64_t>(r.uint(8)));
    e.offset = r.uint(8);
    entries.push_back(std::move(e));
  }
  const std::size_t base = r.pos();
  NamedTensors out;
  for (auto& e : entries) {
    const auto n = static_cast<std::size_t>(rt::numel(e.shape));
    if (base + e.offset + 4 * n > bytes.size())
      fail(ErrorKind::MalformedFile, "weights for " + e.name + " run past the end");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto* p = bytes.data() + base + e.offset + 4 * i;
      const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                                 (static_cast<std::uint32_t>(p[2]) << 16) |
                                 (static_cast<std::uint32_t>(p[3]) << 24);
      float f;
      std::memcpy(&f, &bits, 4);
      v[i] = f;
    }
    out.emplace_back(e.name, Tensor(e.shape, std::move(v)));
  }
  return out;
}

ModelArtifacts generate_model(const ComputationalGraph& g) {
  // Kahn order over operator nodes, ties broken by node index.
  const std::size_t n = g.nodes.size();
  std::vector<std::size_t> indeg(n, 0);
  std::vector<std::vector<std::size_t>> users(n);
  for (std::size_t i = 0; i < n; ++i)
    for (auto in : g.nodes[i].inputs) {
      if (g.nodes[in].kind == GraphNode::Kind::Operator) ++indeg[i];
      users[in].push_back(i);
    }
  std::vector<std::size_t> order;
  std::vector<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (g.nodes[i].kind == GraphNode::Kind::Operator && indeg[i] == 0) ready.push_back(i);
  while (!ready.empty()) {
    auto it = std::min_element(ready.begin(), ready.end());
    const auto k = *it;
    ready.erase(it);
    order.push_back(k);
    for (auto u : users[k])
      if (--indeg[u] == 0) ready.push_back(u);
  }
  std::size_t op_count = 0;
  for (const auto& node : g.nodes) op_count += node.kind == GraphNode::Kind::Operator;
  if (order.size() != op_count) fail(ErrorKind::CycleDetected, "graph has a cycle");

  std::ostringstream init, flow, load;
  NamedTensors weights;
  for (auto i : g.inputs)
    init << "  input " << g.nodes[i].name << " shape=" << join_ints(g.nodes[i].shape) << '\n';
  for (const auto& node : g.nodes) {
    if (node.kind != GraphNode::Kind::Parameter) continue;
    load << "  load " << node.name << " shape=" << join_ints(node.shape);
    if (!node.layout.empty()) load << " layout=" << node.layout;
    load << '\n';
    weights.emplace_back(node.name, node.value);
  }
  for (auto k : order) {
    const auto& node = g.nodes[k];
    if (!node.complete) fail(ErrorKind::InconsistentShapes, "op " + node.name + " is not completed");
    init << "  layer " << node.name << ' ' << rt::to_string(node.op) << attr_text(node.op, node.attrs)
         << " shape=" << join_ints(node.shape) << '\n';
    flow << "  " << node.name << " = " << node.name << '(';
    for (std::size_t a = 0; a < node.inputs.size(); ++a)
      flow << (a ? ", " : "") << g.nodes[node.inputs[a]].name;
    flow << ")\n";
  }
  flow << "  return";
  for (std::size_t o = 0; o < g.outputs.size(); ++o)
    flow << (o ? ", " : " ") << g.nodes[g.outputs[o]].name;
  flow << '\n';

  ModelArtifacts out;
  out.script = "MBUILD v1\ninit:\n" + init.str() + "forward:\n" + flow.str() + "weights:\n" + load.str();
  out.weights = write_weights(weights);
  return out;
}

ComputationalGraph load_model(std::string_view script, std::span<const std::uint8_t> weights) {
  std::map<std::string, Tensor> values;
  for (auto& [name, t] : read_weights(weights)) values.emplace(name, std::move(t));

  std::istringstream is{std::string(script)};
  std::string line;
  int lineno = 0;
  auto bad = [&](const std::string& msg) -> ParseError {
    return ParseError(ErrorKind::MalformedFile, lineno, 1, msg);
  };
  if (!std::getline(is, line) || line != "MBUILD v1") {
    lineno = 1;
    throw bad("expected 'MBUILD v1' header");
  }
  ++lineno;

  struct Layer {
    std::string name;
    OpType op;
    rt::Attributes attrs;
    Shape shape;
  };
  std::vector<std::pair<std::string, Shape>> inputs;
  std::map<std::string, Layer> layers;
  std::vector<std::pair<std::string, std::vector<std::string>>> flow;
  std::vector<std::string> returns;
  std::vector<std::pair<std::string, std::string>> loads;  // name, layout
  std::map<std::string, Shape> load_shapes;

  std::string section;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line == "init:" || line == "forward:" || line == "weights:") {
      section = line;
      continue;
    }
    auto w = words(line);
    if (w.empty()) continue;
    auto kv = [&](std::size_t from) {
      std::map<std::string, std::string> m;
      for (std::size_t i = from; i < w.size(); ++i) {
        const auto eq = w[i].find('=');
        if (eq == std::string::npos) throw bad("expected key=value, got '" + w[i] + "'");
        m[w[i].substr(0, eq)] = w[i].substr(eq + 1);
      }
      return m;
    };
    if (section == "init:") {
      if (w[0] == "input" && w.size() >= 3) {
        auto m = kv(2);
        inputs.emplace_back(w[1], parse_ints(m["shape"], lineno));
      } else if (w[0] == "layer" && w.size() >= 3) {
        Layer l;
        l.name = w[1];
        auto op = rt::op_from_string(w[2]);
        if (!op) throw bad("unknown layer type '" + w[2] + "'");
        l.op = *op;
        for (auto& [k, v] : kv(3)) {
          auto ints = k == "padding" ? std::vector<std::int64_t>{} : parse_ints(v, lineno);
          auto two = [&]() -> std::array<std::int64_t, 2> {
            if (ints.size() != 2) throw bad(k + " needs two values");
            return {ints[0], ints[1]};
          };
          if (k == "shape") l.shape = ints;
          else if (k == "filters") l.attrs.filters = ints.at(0);
          else if (k == "kernel") l.attrs.kernel = two();
          else if (k == "strides") l.attrs.strides = two();
          else if (k == "padding") {
            if (v == "same") l.attrs.padding = rt::Padding::Same;
            else if (v == "valid") l.attrs.padding = rt::Padding::Valid;
            else throw bad("unknown padding '" + v + "'");
          } else if (k == "depth_multiplier") l.attrs.depth_multiplier = ints.at(0);
          else if (k == "pool_size") l.attrs.pool_size = ints.at(0);
          else if (k == "size") l.attrs.size = two();
          else if (k == "block_size") l.attrs.block_size = ints.at(0);
          else if (k == "pads") {
            if (ints.size() != 4) throw bad("pads needs four values");
            l.attrs.pads = {{{ints[0], ints[1]}, {ints[2], ints[3]}}};
          } else throw bad("unknown attribute '" + k + "'");
        }
        layers.emplace(l.name, std::move(l));
      } else {
        throw bad("unrecognised init line");
      }
    } else if (section == "forward:") {
      if (w[0] == "return") {
        std::string rest = line.substr(line.find("return") + 6);
        for (auto& t : words(rest)) {
          if (!t.empty() && t.back() == ',') t.pop_back();
          returns.push_back(t);
        }
        continue;
      }
      const auto eq = line.find('=');
      const auto lp = line.find('('), rp = line.rfind(')');
      if (eq == std::string::npos || lp == std::string::npos || rp == std::string::npos || rp < lp)
        throw bad("expected 'name = layer(args)'");
      auto target = words(line.substr(0, eq));
      if (target.size() != 1) throw bad("expected a single assignment target");
      std::vector<std::string> args;
      std::string inner = line.substr(lp + 1, rp - lp - 1);
      for (char& c : inner)
        if (c == ',') c = ' ';
      args = words(inner);
      flow.emplace_back(target[0], std::move(args));
    } else if (section == "weights:") {
      if (w[0] != "load" || w.size() < 2) throw bad("expected 'load NAME'");
      auto m = kv(2);
      loads.emplace_back(w[1], m["layout"]);
      load_shapes[w[1]] = parse_ints(m["shape"], lineno);
    } else {
      throw bad("content outside of a section");
    }
  }

  ComputationalGraph g;
  std::map<std::string, std::size_t> idx;
  for (auto& [name, shape] : inputs) {
    GraphNode n;
    n.kind = GraphNode::Kind::Input;
    n.name = name;
    n.shape = shape;
    idx[name] = g.nodes.size();
    g.inputs.push_back(g.nodes.size());
    g.nodes.push_back(std::move(n));
  }
  for (auto& [name, layout] : loads) {
    auto it = values.find(name);
    if (it == values.end()) fail(ErrorKind::MalformedFile, "no weights stored for " + name);
    if (it->second.shape != load_shapes[name])
      fail(ErrorKind::ShapeMismatch, "stored weights for " + name + " have shape " +
                                         rt::format_shape(it->second.shape));
    GraphNode n;
    n.kind = GraphNode::Kind::Parameter;
    n.name = name;
    n.shape = it->second.shape;
    n.value = it->second;
    n.layout = layout;
    idx[name] = g.nodes.size();
    g.nodes.push_back(std::move(n));
  }
  for (auto& [name, args] : flow) {
    auto it = layers.find(name);
    if (it == layers.end()) fail(ErrorKind::DanglingTensor, "forward uses undeclared layer " + name);
    GraphNode n;
    n.kind = GraphNode::Kind::Operator;
    n.name = name;
    n.op = it->second.op;
    n.attrs = it->second.attrs;
    n.shape = it->second.shape;
    n.complete = true;
    for (auto& a : args) {
      auto j = idx.find(a);
      if (j == idx.end()) fail(ErrorKind::DanglingTensor, "layer " + name + " reads undefined " + a);
      n.inputs.push_back(j->second);
    }
    idx[name] = g.nodes.size();
    g.nodes.push_back(std::move(n));
  }
  for (auto& r : returns) {
    auto j = idx.find(r);
    if (j == idx.end()) fail(ErrorKind::DanglingTensor, "return of undefined " + r);
    g.outputs.push_back(j->second);
  }
  check_consistency(g);
  return g;
}

ComputationalGraph load_model_files(const std::filesystem::path& script_path,
                                    const std::filesystem::path& weights_path) {
  const auto bytes = read_file_bytes(weights_path);
  return load_model(read_file_text(script_path), bytes);
}

}  // namespace recon::graph
