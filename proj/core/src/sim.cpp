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

#include "recon/sim.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "recon/error.hpp"

namespace recon::graph {

namespace {

[[noreturn]] void bad(int line, const std::string& msg) {
  throw ParseError(ErrorKind::MalformedFile, line, 1, msg);
}

std::int64_t to_int(const std::string& s, int line) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) bad(line, "expected integer, got '" + s + "'");
  return v;
}

double to_double(const std::string& s, int line) {
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  double v = 0;
  if (!(in >> v) || !in.eof()) bad(line, "expected number, got '" + s + "'");
  return v;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

rt::Shape parse_shape(const std::string& s, int line) {
  rt::Shape out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto d = to_int(part, line);
    if (d < 1) bad(line, "shape extents must be >= 1");
    out.push_back(d);
  }
  if (out.empty()) bad(line, "empty shape");
  return out;
}

std::uint32_t load_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void store_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

const SimTensor* StrippedGraph::tensor(std::int64_t id) const {
  for (const auto& t : tensors)
    if (t.id == id) return &t;
  return nullptr;
}

StrippedGraph parse_sim(std::string_view manifest, std::span<const std::uint8_t> blob) {
  StrippedGraph g;
  std::istringstream in{std::string(manifest)};
  std::string raw;
  int line = 0;
  bool header = false;
  std::set<std::int64_t> ids;
  while (std::getline(in, raw)) {
    ++line;
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (!header) {
      if (tok.size() != 2 || tok[0] != "SIM" || tok[1] != "v1") bad(line, "expected 'SIM v1' header");
      header = true;
      continue;
    }
    const std::string& kw = tok[0];
    if (kw == "blob") {
      if (tok.size() != 2) bad(line, "expected 'blob FILE'");
    } else if (kw == "tensor") {
      if (tok.size() < 2) bad(line, "tensor needs an id");
      SimTensor t;
      t.id = to_int(tok[1], line);
      if (!ids.insert(t.id).second) bad(line, "duplicate tensor id " + tok[1]);
      bool have_shape = false;
      std::optional<std::pair<std::int64_t, std::int64_t>> data;
      for (std::size_t i = 2; i < tok.size(); i += 2) {
        if (i + 1 >= tok.size() && tok[i] != "data") bad(line, "missing value for '" + tok[i] + "'");
        const std::string& key = tok[i];
        if (key == "shape") {
          t.shape = parse_shape(tok[i + 1], line);
          have_shape = true;
        } else if (key == "dtype") {
          if (tok[i + 1] == "f32") t.dtype = DType::F32;
          else if (tok[i + 1] == "q8") t.dtype = DType::Q8;
          else bad(line, "unsupported dtype '" + tok[i + 1] + "'");
        } else if (key == "scale") {
          t.scale = to_double(tok[i + 1], line);
        } else if (key == "zero") {
          t.zero_point = to_int(tok[i + 1], line);
        } else if (key == "data") {
          if (i + 2 >= tok.size()) bad(line, "expected 'data OFFSET LENGTH'");
          data = {to_int(tok[i + 1], line), to_int(tok[i + 2], line)};
          ++i;
        } else if (key == "layout") {
          t.layout = tok[i + 1];
        } else if (key == "name") {
          t.name = tok[i + 1];
        } else {
          bad(line, "unknown tensor attribute '" + key + "'");
        }
      }
      if (!have_shape) bad(line, "tensor " + tok[1] + " has no shape");
      if (t.dtype == DType::Q8 && (!t.scale || !t.zero_point))
        throw ParseError(ErrorKind::MissingQuantParams, line, 1,
                         "q8 tensor " + tok[1] + " lacks scale or zero point");
      if (t.dtype == DType::F32 && (t.scale || t.zero_point))
        bad(line, "f32 tensor " + tok[1] + " must not carry quantization parameters");
      if (data) {
        const auto n = rt::numel(t.shape);
        const auto width = t.dtype == DType::F32 ? 4 : 1;
        const auto [off, len] = *data;
        if (len != n * width) bad(line, "data length does not match shape and dtype");
        if (off < 0 || static_cast<std::size_t>(off + len) > blob.size())
          bad(line, "data range exceeds blob size " + std::to_string(blob.size()));
        const std::uint8_t* p = blob.data() + off;
        t.has_data = true;
        if (t.dtype == DType::F32) {
          t.f32.resize(static_cast<std::size_t>(n));
          for (std::int64_t k = 0; k < n; ++k)
            t.f32[static_cast<std::size_t>(k)] = std::bit_cast<float>(load_u32(p + 4 * k));
        } else {
          t.q8.assign(p, p + n);
        }
      }
      g.tensors.push_back(std::move(t));
    } else if (kw == "op") {
      if (tok.size() < 3) bad(line, "expected 'op OPCODE in ... out ...'");
      SimOp op;
      op.opcode = static_cast<int>(to_int(tok[1], line));
      std::vector<std::int64_t>* into = nullptr;
      for (std::size_t i = 2; i < tok.size(); ++i) {
        if (tok[i] == "in") into = &op.inputs;
        else if (tok[i] == "out") into = &op.outputs;
        else if (!into) bad(line, "expected 'in' or 'out'");
        else into->push_back(to_int(tok[i], line));
      }
      if (op.outputs.empty()) bad(line, "op without outputs");
      g.ops.push_back(std::move(op));
    } else if (kw == "inputs" || kw == "outputs") {
      auto& into = kw == "inputs" ? g.inputs : g.outputs;
      for (std::size_t i = 1; i < tok.size(); ++i) into.push_back(to_int(tok[i], line));
    } else {
      bad(line, "unknown manifest entry '" + kw + "'");
    }
  }
  if (!header) bad(line, "expected 'SIM v1' header");
  auto check = [&](std::int64_t id, const std::string& where) {
    if (!ids.count(id))
      fail(ErrorKind::DanglingTensor, where + " references unknown tensor " + std::to_string(id));
  };
  for (std::size_t k = 0; k < g.ops.size(); ++k) {
    for (auto id : g.ops[k].inputs) check(id, "op " + std::to_string(k));
    for (auto id : g.ops[k].outputs) check(id, "op " + std::to_string(k));
  }
  for (auto id : g.inputs) check(id, "graph inputs");
  for (auto id : g.outputs) check(id, "graph outputs");
  if (g.inputs.empty() || g.outputs.empty()) bad(line, "graph inputs and outputs must be declared");
  return g;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::Io, "cannot write " + path.string());
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) fail(ErrorKind::Io, "write failed for " + path.string());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  write_file(path, std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

StrippedGraph load_sim(const std::filesystem::path& path) {
  const std::string manifest = read_file_text(path);
  std::istringstream in(manifest);
  std::string raw;
  std::vector<std::uint8_t> blob;
  while (std::getline(in, raw)) {
    std::istringstream ls(raw);
    std::string kw, name;
    if (ls >> kw >> name && kw == "blob") {
      blob = read_file_bytes(path.parent_path() / name);
      break;
    }
  }
  return parse_sim(manifest, blob);
}

SimFiles write_sim(const StrippedGraph& g, const std::string& blob_name) {
  SimFiles out;
  std::ostringstream m;
  m << "SIM v1\nblob " << blob_name << "\n";
  for (const auto& t : g.tensors) {
    m << "tensor " << t.id << " shape " << rt::format_shape(t.shape) << " dtype "
      << (t.dtype == DType::F32 ? "f32" : "q8");
    if (t.scale) m << " scale " << fmt_double(*t.scale);
    if (t.zero_point) m << " zero " << *t.zero_point;
    if (t.has_data) {
      const std::size_t off = out.blob.size();
      if (t.dtype == DType::F32) {
        for (float v : t.f32) store_u32(out.blob, std::bit_cast<std::uint32_t>(v));
      } else {
        out.blob.insert(out.blob.end(), t.q8.begin(), t.q8.end());
      }
      m << " data " << off << " " << out.blob.size() - off;
      while (out.blob.size() % 4) out.blob.push_back(0);
    }
    if (!t.layout.empty()) m << " layout " << t.layout;
    if (!t.name.empty()) m << " name " << t.name;
    m << "\n";
  }
  for (const auto& op : g.ops) {
    m << "op " << op.opcode << " in";
    for (auto id : op.inputs) m << " " << id;
    m << " out";
    for (auto id : op.outputs) m << " " << id;
    m << "\n";
  }
  m << "inputs";
  for (auto id : g.inputs) m << " " << id;
  m << "\noutputs";
  for (auto id : g.outputs) m << " " << id;
  m << "\n";
  out.manifest = m.str();
  return out;
}

}  // namespace recon::graph
