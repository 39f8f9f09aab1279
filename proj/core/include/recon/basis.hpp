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

// Program-wide dependence graph ("slicing basis") and discovery of slicing
// criteria at framework-invocation statements.

#ifndef RECON_BASIS_HPP_
#define RECON_BASIS_HPP_

#include <compare>
#include <map>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recon/analysis.hpp"
#include "recon/mir.hpp"

namespace recon::slicing {

/// A statement identified by function index and body index.
struct StmtRef {
  std::uint32_t func = 0;
  std::uint32_t index = 0;

  friend auto operator<=>(const StmtRef&, const StmtRef&) = default;
};

enum class EdgeKind {
  LocalDefUse,
  FieldDefUse,
  CallEntry,
  CallReturn,
  BranchControl,
};

std::string_view to_string(EdgeKind kind);

struct BasisEdge {
  StmtRef src;
  StmtRef dst;
  EdgeKind kind = EdgeKind::LocalDefUse;
  /// Carried value for data edges; empty name otherwise.
  mir::ValueRef value;
  /// Call site for CallEntry / CallReturn edges.
  std::optional<StmtRef> site;
};

/// Dependence graph over every statement of a program. Holds a reference to
/// the program, which must outlive it.
class SlicingBasis {
 public:
  explicit SlicingBasis(const mir::Program& program);

  const mir::Program& program() const { return *program_; }
  const std::vector<BasisEdge>& edges() const { return edges_; }
  std::span<const std::size_t> in_edges(StmtRef n) const;
  std::span<const std::size_t> out_edges(StmtRef n) const;

  std::size_t node_count() const { return node_count_; }
  std::size_t flat(StmtRef n) const { return offset_[n.func] + n.index; }
  StmtRef unflat(std::size_t id) const;

  const mir::Statement& stmt(StmtRef n) const;
  const mir::DefUse& def_use(StmtRef n) const { return du_[flat(n)]; }
  const mir::Function& function_of(StmtRef n) const;
  const mir::Cfg& cfg(std::uint32_t func) const { return cfgs_[func]; }

  /// Call sites targeting function `func`, in document order.
  const std::vector<StmtRef>& call_sites(std::uint32_t func) const {
    return callers_[func];
  }
  /// Exit statements (returns and fall-off points) of `func`.
  std::vector<StmtRef> exits(std::uint32_t func) const;
  /// True when the function-entry value of parameter `var` reaches a use at n.
  bool param_reaches(StmtRef n, const mir::VarId& var) const;
  /// Statements using parameter `param_index` of `func` at its entry value.
  std::vector<StmtRef> entry_users(std::uint32_t func,
                                   std::size_t param_index) const;
  /// Internal callee of a call statement, if it targets a declared function.
  std::optional<std::uint32_t> callee(StmtRef call_site) const;

  std::string qualified(StmtRef n) const;
  std::optional<StmtRef> resolve(std::string_view qualified) const;

 private:
  void add_edge(BasisEdge e);

  const mir::Program* program_;
  std::vector<std::size_t> offset_;
  std::size_t node_count_ = 0;
  std::vector<mir::DefUse> du_;
  std::vector<mir::Cfg> cfgs_;
  std::vector<mir::ReachingDefs> reaching_;
  std::vector<std::vector<StmtRef>> callers_;
  std::vector<BasisEdge> edges_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
};

SlicingBasis build_basis(const mir::Program& program);

enum class Direction { Backward, Forward };

struct SlicingCriterion {
  StmtRef stmt;
  mir::ValueSet values;
  Direction direction = Direction::Backward;
};

/// Coarse value shapes used to recognise framework interfaces.
enum class Shape { Int, Float, IntArr, FloatArr, Str, Any };

std::string_view to_string(Shape shape);

struct FrameworkSignature {
  std::string name_glob = "*";
  /// Absent means any arity and any parameter shapes.
  std::optional<std::vector<Shape>> params;
  Shape ret = Shape::Any;
};

/// Parses `name=<glob>;params=<shape,...>;ret=<shape>` lines. Keys may be
/// omitted (wildcard) but not all three at once.
std::vector<FrameworkSignature> parse_signatures(std::string_view text);

/// Inferred static type of a MIR variable. `Array` is an array whose element
/// type is unknown; `Conflict` means incompatible definitions.
enum class StaticType { Unknown, Int, Float, Array, IntArr, FloatArr, Conflict };

/// Flow-insensitive static types of every variable, keyed "func:var".
std::map<std::string, StaticType> infer_types(const mir::Program& program);

bool shape_accepts(Shape pattern, StaticType type);

bool matches(const FrameworkSignature& sig, const mir::Statement& call,
             const std::map<std::string, StaticType>& types,
             const std::string& func);

/// For each call matching a signature, in document order: a backward
/// criterion over use(stmt) and a forward criterion over def(stmt).
/// Throws NoCriterionFound.
std::vector<SlicingCriterion> find_criteria(
    const SlicingBasis& basis, const std::vector<FrameworkSignature>& sigs);

}  // namespace recon::slicing

#endif  // RECON_BASIS_HPP_
