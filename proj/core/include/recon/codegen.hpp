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

#ifndef RECON_CODEGEN_HPP_
#define RECON_CODEGEN_HPP_

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "recon/analysis.hpp"
#include "recon/interp.hpp"
#include "recon/mir.hpp"
#include "recon/slicer.hpp"

namespace recon::codegen {

struct Node {
  enum class Kind { Stmt, If, While };
  Kind kind = Kind::Stmt;
  /// Stmt: a primitive or return. If/While: the condition, stored as an
  /// IfGoto with an empty target; a While repeats while it holds.
  mir::Statement stmt;
  std::vector<Node> body;  // then-branch or loop body
  std::vector<Node> orelse;
  /// Label whose presence in a slice keeps this node; empty means stmt.label.
  mir::Label origin;

  const mir::Label& key() const { return origin.empty() ? stmt.label : origin; }
};

using Block = std::vector<Node>;

struct StructuredFunction {
  mir::FunctionId id;
  std::vector<mir::VarId> params;
  Block body;
};

/// Rebuilds structured control flow (no gotos) for a whole function.
StructuredFunction reconstruct_loops(const mir::Function& f, const mir::Cfg& g,
                                     const mir::DomMatrix& dom);
StructuredFunction reconstruct_loops(const mir::Function& f);

/// Drops statements whose labels are not kept. Returns always survive, bare
/// when their own label is not kept.
StructuredFunction prune(const StructuredFunction& f, const std::set<mir::Label>& keep);

std::size_t count_loops(const Block& b);

/// Runs a structured function directly against a machine.
std::optional<interp::Value> run_structured(const StructuredFunction& f,
                                            interp::Machine& m,
                                            std::vector<interp::Value> args);

struct FunctionGroup {
  std::set<mir::FunctionId> members;
  mir::FunctionId head;
  std::set<mir::FieldId> reads;
  std::set<mir::FieldId> writes;
};

/// Groups the functions holding sliced statements by the sliced call relation.
std::vector<FunctionGroup> group_functions(const mir::Program& p,
                                           const std::set<slicing::StmtRef>& sliced);

std::vector<mir::FunctionId> order_heads(const std::vector<FunctionGroup>& groups);

struct ProcessingProgram {
  std::map<std::string, int> externs;
  std::vector<mir::FieldId> fields;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<StructuredFunction> functions;
  std::vector<mir::FunctionId> order;

  const StructuredFunction* function(std::string_view id) const;
};

ProcessingProgram emit_program(const mir::Program& source,
                               const std::vector<StructuredFunction>& functions,
                               const std::vector<mir::FunctionId>& order);

enum class SliceSelection { Pre, Post, Both };

/// Slices -> structured, pruned, ordered program.
ProcessingProgram generate(const mir::Program& p,
                           const std::vector<slicing::ProcessingSlice>& slices,
                           SliceSelection which = SliceSelection::Both);

std::string print_pprog(const ProcessingProgram& p);
ProcessingProgram parse_pprog(std::string_view text);

interp::RunResult interpret(const ProcessingProgram& p, const interp::Environment& env);

}  // namespace recon::codegen

#endif  // RECON_CODEGEN_HPP_
