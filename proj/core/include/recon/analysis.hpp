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

// Intra-function control flow, dominance, and def-use analyses over MIR.

#ifndef RECON_ANALYSIS_HPP_
#define RECON_ANALYSIS_HPP_

#include <cstddef>
#include <map>
#include <set>
#include <vector>

#include "recon/mir.hpp"

namespace recon::mir {

/// Statement-level control flow graph. Node i is body[i].
struct Cfg {
  std::vector<Label> nodes;
  std::vector<std::vector<std::size_t>> succ;
  std::vector<std::vector<std::size_t>> pred;
  std::size_t entry = 0;
  /// Returns plus statements whose fall-through leaves the body.
  std::vector<std::size_t> exits;

  std::size_t size() const { return nodes.size(); }
  bool has_edge(std::size_t from, std::size_t to) const;
  bool is_exit(std::size_t n) const;
};

Cfg build_cfg(const Function& f);

std::vector<std::size_t> reverse_postorder(const Cfg& g);

/// dom[n][d] is true when d dominates n.
using DomMatrix = std::vector<std::vector<bool>>;

/// Iterative dominator fixpoint over reverse postorder.
DomMatrix dominator_matrix(const Cfg& g);
std::map<Label, std::set<Label>> dominators(const Cfg& g);

/// Post-dominators relative to a virtual exit node (index g.size()) that
/// every exit statement flows into. Row g.size() is the virtual exit.
DomMatrix postdominator_matrix(const Cfg& g);

/// Immediate post-dominator of every node; g.size() denotes the virtual exit.
std::vector<std::size_t> immediate_postdominators(const Cfg& g);

/// controlled[b] lists the nodes whose execution branch b decides, using
/// the post-dominance definition: n is controlled by b when some successor
/// s of b has n post-dominating s while n does not strictly post-dominate b.
std::vector<std::vector<std::size_t>> control_dependences(const Cfg& g);

struct CallEdge {
  FunctionId caller;
  Label site;
  FunctionId callee;

  friend bool operator==(const CallEdge&, const CallEdge&) = default;
};

struct CallGraph {
  std::vector<CallEdge> edges;
};

/// One edge per call site whose target is a declared function.
CallGraph build_call_graph(const Program& p);

/// Flow-sensitive reaching definitions of local variables.
struct ReachingDefs {
  /// reaching[s][v]: statements whose definition of v reaches the use at s.
  std::vector<std::map<VarId, std::vector<std::size_t>>> reaching;
  /// entry[s]: used variables at s whose function-entry value (parameter or
  /// uninitialized) reaches s along a def-clear path.
  std::vector<std::set<VarId>> entry;
};

ReachingDefs reaching_definitions(const Function& f, const Cfg& g);

}  // namespace recon::mir

#endif  // RECON_ANALYSIS_HPP_
