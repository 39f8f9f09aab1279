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

#include "recon/basis.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <map>

#include "recon/error.hpp"

namespace recon::slicing {

using mir::StmtKind;

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::LocalDefUse: return "LocalDefUse";
    case EdgeKind::FieldDefUse: return "FieldDefUse";
    case EdgeKind::CallEntry: return "CallEntry";
    case EdgeKind::CallReturn: return "CallReturn";
    case EdgeKind::BranchControl: return "BranchControl";
  }
  return "?";
}

SlicingBasis::SlicingBasis(const mir::Program& program) : program_(&program) {
  const auto& fns = program.functions;
  offset_.resize(fns.size());
  for (std::size_t f = 0; f < fns.size(); ++f) {
    offset_[f] = node_count_;
    node_count_ += fns[f].body.size();
  }
  du_.reserve(node_count_);
  for (const auto& f : fns)
    for (const auto& s : f.body) du_.push_back(mir::def_use(s));
  in_.assign(node_count_, {});
  out_.assign(node_count_, {});
  callers_.assign(fns.size(), {});
  for (const auto& f : fns) {
    cfgs_.push_back(mir::build_cfg(f));
    reaching_.push_back(mir::reaching_definitions(f, cfgs_.back()));
  }

  // Local def-use along def-clear paths.
  for (std::uint32_t f = 0; f < fns.size(); ++f)
    for (std::uint32_t i = 0; i < fns[f].body.size(); ++i)
      for (const auto& [var, defs] : reaching_[f].reaching[i])
        for (std::size_t d : defs)
          add_edge({{f, static_cast<std::uint32_t>(d)}, {f, i},
                    EdgeKind::LocalDefUse, mir::ValueRef::var(var), std::nullopt});

  // Field def-use: every write of a field to every read of it.
  std::map<mir::FieldId, std::vector<StmtRef>> writes, reads;
  for (std::uint32_t f = 0; f < fns.size(); ++f)
    for (std::uint32_t i = 0; i < fns[f].body.size(); ++i) {
      const auto& s = fns[f].body[i];
      if (s.kind == StmtKind::FieldWrite) writes[s.field].push_back({f, i});
      if (s.kind == StmtKind::FieldRead) reads[s.field].push_back({f, i});
    }
  for (const auto& [field, ws] : writes)
    for (const auto& w : ws)
      for (const auto& r : reads[field])
        add_edge({w, r, EdgeKind::FieldDefUse, mir::ValueRef::field(field), std::nullopt});

  // Call entry / return.
  for (std::uint32_t f = 0; f < fns.size(); ++f)
    for (std::uint32_t i = 0; i < fns[f].body.size(); ++i) {
      const StmtRef site{f, i};
      auto g = callee(site);
      if (!g) continue;
      callers_[*g].push_back(site);
      add_edge({site, {*g, 0}, EdgeKind::CallEntry, {}, site});
      for (const auto& x : exits(*g))
        add_edge({x, site, EdgeKind::CallReturn, {}, site});
    }

  // Intra-function control dependence.
  for (std::uint32_t f = 0; f < fns.size(); ++f) {
    const auto controlled = mir::control_dependences(cfgs_[f]);
    for (std::uint32_t b = 0; b < controlled.size(); ++b)
      for (std::size_t m : controlled[b])
        add_edge({{f, b}, {f, static_cast<std::uint32_t>(m)},
                  EdgeKind::BranchControl, {}, std::nullopt});
  }
}

void SlicingBasis::add_edge(BasisEdge e) {
  const std::size_t id = edges_.size();
  in_[flat(e.dst)].push_back(id);
  out_[flat(e.src)].push_back(id);
  edges_.push_back(std::move(e));
}

std::span<const std::size_t> SlicingBasis::in_edges(StmtRef n) const {
  return in_[flat(n)];
}

std::span<const std::size_t> SlicingBasis::out_edges(StmtRef n) const {
  return out_[flat(n)];
}

StmtRef SlicingBasis::unflat(std::size_t id) const {
  auto it = std::upper_bound(offset_.begin(), offset_.end(), id);
  auto f = static_cast<std::uint32_t>(std::distance(offset_.begin(), it) - 1);
  // Skip empty functions sharing the same offset.
  while (f + 1 < offset_.size() && offset_[f + 1] == offset_[f] &&
         program_->functions[f].body.empty())
    ++f;
  return {f, static_cast<std::uint32_t>(id - offset_[f])};
}

const mir::Statement& SlicingBasis::stmt(StmtRef n) const {
  return program_->functions[n.func].body[n.index];
}

const mir::Function& SlicingBasis::function_of(StmtRef n) const {
  return program_->functions[n.func];
}

std::vector<StmtRef> SlicingBasis::exits(std::uint32_t func) const {
  std::vector<StmtRef> out;
  for (std::size_t x : cfgs_[func].exits)
    out.push_back({func, static_cast<std::uint32_t>(x)});
  return out;
}

bool SlicingBasis::param_reaches(StmtRef n, const mir::VarId& var) const {
  const auto& params = program_->functions[n.func].params;
  if (std::find(params.begin(), params.end(), var) == params.end()) return false;
  return reaching_[n.func].entry[n.index].count(var) > 0;
}

std::vector<StmtRef> SlicingBasis::entry_users(std::uint32_t func,
                                               std::size_t param_index) const {
  std::vector<StmtRef> out;
  const auto& f = program_->functions[func];
  const auto& var = f.params.at(param_index);
  for (std::uint32_t i = 0; i < f.body.size(); ++i)
    if (reaching_[func].entry[i].count(var)) out.push_back({func, i});
  return out;
}

std::optional<std::uint32_t> SlicingBasis::callee(StmtRef site) const {
  const auto& s = stmt(site);
  if (s.kind != StmtKind::Call) return std::nullopt;
  auto idx = program_->function_index(s.callee);
  if (!idx) return std::nullopt;
  return static_cast<std::uint32_t>(*idx);
}

std::string SlicingBasis::qualified(StmtRef n) const {
  return program_->functions[n.func].id + ":" + stmt(n).label;
}

std::optional<StmtRef> SlicingBasis::resolve(std::string_view q) const {
  const auto colon = q.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto f = program_->function_index(q.substr(0, colon));
  if (!f) return std::nullopt;
  auto i = program_->functions[*f].find(q.substr(colon + 1));
  if (!i) return std::nullopt;
  return StmtRef{static_cast<std::uint32_t>(*f), static_cast<std::uint32_t>(*i)};
}

SlicingBasis build_basis(const mir::Program& program) {
  return SlicingBasis(program);
}

// ---------------------------------------------------------------------------
// Signatures and criteria

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::Int: return "int";
    case Shape::Float: return "float";
    case Shape::IntArr: return "intarr";
    case Shape::FloatArr: return "floatarr";
    case Shape::Str: return "str";
    case Shape::Any: return "any";
  }
  return "?";
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<Shape> shape_from(std::string_view s) {
  for (Shape sh : {Shape::Int, Shape::Float, Shape::IntArr, Shape::FloatArr,
                   Shape::Str, Shape::Any})
    if (to_string(sh) == s) return sh;
  return std::nullopt;
}

}  // namespace

std::vector<FrameworkSignature> parse_signatures(std::string_view text) {
  std::vector<FrameworkSignature> sigs;
  int line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line = trim(text.substr(start, nl - start));
    start = nl + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    FrameworkSignature sig;
    bool any_key = false;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t semi = line.find(';', pos);
      if (semi == std::string::npos) semi = line.size();
      const std::string part = trim(std::string_view(line).substr(pos, semi - pos));
      pos = semi + 1;
      if (part.empty()) {
        if (semi == line.size()) break;
        continue;
      }
      const auto eq = part.find('=');
      if (eq == std::string::npos)
        throw ParseError(ErrorKind::MalformedFile, line_no, 1,
                         "expected key=value in signature");
      const std::string key = trim(std::string_view(part).substr(0, eq));
      const std::string value = trim(std::string_view(part).substr(eq + 1));
      any_key = true;
      if (key == "name") {
        if (value.empty())
          throw ParseError(ErrorKind::MalformedFile, line_no, 1, "empty name pattern");
        sig.name_glob = value;
      } else if (key == "params") {
        if (value == "*") continue;
        std::vector<Shape> shapes;
        std::size_t p = 0;
        while (!value.empty() && p <= value.size()) {
          std::size_t comma = value.find(',', p);
          if (comma == std::string::npos) comma = value.size();
          auto sh = shape_from(trim(std::string_view(value).substr(p, comma - p)));
          if (!sh)
            throw ParseError(ErrorKind::MalformedFile, line_no, 1,
                             "unknown shape in '" + value + "'");
          shapes.push_back(*sh);
          p = comma + 1;
          if (comma == value.size()) break;
        }
        sig.params = std::move(shapes);
      } else if (key == "ret") {
        auto sh = shape_from(value);
        if (!sh)
          throw ParseError(ErrorKind::MalformedFile, line_no, 1,
                           "unknown shape '" + value + "'");
        sig.ret = *sh;
      } else {
        throw ParseError(ErrorKind::MalformedFile, line_no, 1,
                         "unknown signature key '" + key + "'");
      }
      if (semi == line.size()) break;
    }
    const bool all_wild = sig.name_glob == "*" && !sig.params && sig.ret == Shape::Any;
    if (!any_key || all_wild)
      throw ParseError(ErrorKind::MalformedFile, line_no, 1,
                       "signature must constrain name, params or ret");
    sigs.push_back(std::move(sig));
  }
  return sigs;
}

namespace {

StaticType join(StaticType a, StaticType b) {
  if (a == b || b == StaticType::Unknown) return a;
  if (a == StaticType::Unknown) return b;
  if (a == StaticType::Conflict || b == StaticType::Conflict) return StaticType::Conflict;
  if (a == StaticType::Array && (b == StaticType::IntArr || b == StaticType::FloatArr)) return b;
  if (b == StaticType::Array && (a == StaticType::IntArr || a == StaticType::FloatArr)) return a;
  return StaticType::Conflict;
}

StaticType literal_type(const mir::Scalar& s) {
  return std::holds_alternative<std::int64_t>(s) ? StaticType::Int : StaticType::Float;
}

class TypeInference {
 public:
  explicit TypeInference(const mir::Program& p) : p_(p) {}

  std::map<std::string, StaticType> run() {
    for (int round = 0; round < 64; ++round) {
      changed_ = false;
      for (const auto& f : p_.functions)
        for (const auto& s : f.body) visit(f, s);
      if (!changed_) break;
    }
    return types_;
  }

 private:
  StaticType get(const std::string& key) const {
    auto it = types_.find(key);
    return it == types_.end() ? StaticType::Unknown : it->second;
  }
  void put(const std::string& key, StaticType t) {
    if (t == StaticType::Unknown) return;
    const StaticType merged = join(get(key), t);
    if (merged != get(key)) {
      types_[key] = merged;
      changed_ = true;
    }
  }
  StaticType operand(const mir::Function& f, const mir::Operand& op) const {
    return op.is_var() ? get(f.id + ":" + op.name()) : literal_type(op.literal());
  }

  void visit(const mir::Function& f, const mir::Statement& s) {
    const std::string dst = f.id + ":" + s.dst;
    switch (s.kind) {
      case StmtKind::AssignConst:
        put(dst, literal_type(s.a.literal()));
        break;
      case StmtKind::AssignBinop: {
        if (mir::is_comparison(s.binop) || s.binop == mir::BinOp::Shl ||
            s.binop == mir::BinOp::Shr) {
          put(dst, StaticType::Int);
          break;
        }
        const StaticType a = operand(f, s.a), b = operand(f, s.b);
        if (a == StaticType::Float || b == StaticType::Float)
          put(dst, StaticType::Float);
        else if (a == StaticType::Int && b == StaticType::Int)
          put(dst, StaticType::Int);
        break;
      }
      case StmtKind::AssignUnop:
        switch (s.unop) {
          case mir::UnOp::Not:
          case mir::UnOp::Float2Int: put(dst, StaticType::Int); break;
          case mir::UnOp::Int2Float: put(dst, StaticType::Float); break;
          default: put(dst, operand(f, s.a)); break;
        }
        break;
      case StmtKind::ArrayNew:
        put(dst, StaticType::Array);
        break;
      case StmtKind::ArrayWrite: {
        const StaticType v = operand(f, s.b);
        put(f.id + ":" + s.array, v == StaticType::Int     ? StaticType::IntArr
                                  : v == StaticType::Float ? StaticType::FloatArr
                                                           : StaticType::Array);
        break;
      }
      case StmtKind::ArrayRead: {
        const std::string arr = f.id + ":" + s.array;
        put(arr, StaticType::Array);
        const StaticType t = get(arr);
        if (t == StaticType::IntArr) put(dst, StaticType::Int);
        if (t == StaticType::FloatArr) put(dst, StaticType::Float);
        break;
      }
      case StmtKind::FieldRead:
        put(dst, get("field:" + s.field));
        break;
      case StmtKind::FieldWrite:
        put("field:" + s.field, operand(f, s.a));
        break;
      case StmtKind::Call:
        if (const mir::Function* g = p_.function(s.callee)) {
          for (std::size_t k = 0; k < s.args.size(); ++k)
            put(g->id + ":" + g->params[k], operand(f, s.args[k]));
          if (!s.dst.empty()) put(dst, get("return:" + g->id));
        }
        break;
      case StmtKind::Return:
        if (s.has_value) put("return:" + f.id, operand(f, s.a));
        break;
      default:
        break;
    }
  }

  const mir::Program& p_;
  std::map<std::string, StaticType> types_;
  bool changed_ = false;
};

}  // namespace

std::map<std::string, StaticType> infer_types(const mir::Program& program) {
  return TypeInference(program).run();
}

bool shape_accepts(Shape pattern, StaticType type) {
  switch (pattern) {
    case Shape::Any: return true;
    case Shape::Int: return type == StaticType::Int;
    case Shape::Float: return type == StaticType::Float;
    case Shape::IntArr: return type == StaticType::IntArr || type == StaticType::Array;
    case Shape::FloatArr: return type == StaticType::FloatArr || type == StaticType::Array;
    case Shape::Str: return false;  // MIR has no string values
  }
  return false;
}

bool matches(const FrameworkSignature& sig, const mir::Statement& call,
             const std::map<std::string, StaticType>& types,
             const std::string& func) {
  if (call.kind != StmtKind::Call) return false;
  if (fnmatch(sig.name_glob.c_str(), call.callee.c_str(), 0) != 0) return false;
  auto type_of = [&](const mir::Operand& op) {
    if (!op.is_var()) return literal_type(op.literal());
    auto it = types.find(func + ":" + op.name());
    return it == types.end() ? StaticType::Unknown : it->second;
  };
  if (sig.params) {
    if (sig.params->size() != call.args.size()) return false;
    for (std::size_t k = 0; k < call.args.size(); ++k)
      if (!shape_accepts((*sig.params)[k], type_of(call.args[k]))) return false;
  }
  if (sig.ret != Shape::Any) {
    if (call.dst.empty()) return false;
    if (!shape_accepts(sig.ret, type_of(mir::Operand::var(call.dst)))) return false;
  }
  return true;
}

std::vector<SlicingCriterion> find_criteria(
    const SlicingBasis& basis, const std::vector<FrameworkSignature>& sigs) {
  const auto& p = basis.program();
  const auto types = infer_types(p);
  std::vector<SlicingCriterion> out;
  for (std::uint32_t f = 0; f < p.functions.size(); ++f)
    for (std::uint32_t i = 0; i < p.functions[f].body.size(); ++i) {
      const auto& s = p.functions[f].body[i];
      const bool hit = std::any_of(sigs.begin(), sigs.end(), [&](const auto& sig) {
        return matches(sig, s, types, p.functions[f].id);
      });
      if (!hit) continue;
      const auto& du = basis.def_use({f, i});
      out.push_back({{f, i}, du.uses, Direction::Backward});
      out.push_back({{f, i}, du.defs, Direction::Forward});
    }
  if (out.empty())
    fail(ErrorKind::NoCriterionFound, "no statement matches the framework signatures");
  return out;
}

}  // namespace recon::slicing
