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

#include "recon/analysis.hpp"

#include <algorithm>
#include <cstdint>

namespace recon::mir {

bool Cfg::has_edge(std::size_t from, std::size_t to) const {
  return std::find(succ[from].begin(), succ[from].end(), to) != succ[from].end();
}

bool Cfg::is_exit(std::size_t n) const {
  return std::find(exits.begin(), exits.end(), n) != exits.end();
}

Cfg build_cfg(const Function& f) {
  Cfg g;
  const std::size_t n = f.body.size();
  g.nodes.reserve(n);
  for (const auto& s : f.body) g.nodes.push_back(s.label);
  g.succ.assign(n, {});
  g.pred.assign(n, {});
  auto add = [&](std::size_t from, std::size_t to) {
    if (to >= n) {
      if (!g.is_exit(from)) g.exits.push_back(from);
      return;
    }
    if (!g.has_edge(from, to)) {
      g.succ[from].push_back(to);
      g.pred[to].push_back(from);
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = f.body[i];
    switch (s.kind) {
      case StmtKind::Goto:
        add(i, *f.find(s.target));
        break;
      case StmtKind::IfGoto:
        add(i, i + 1);
        add(i, *f.find(s.target));
        break;
      case StmtKind::Return:
        g.exits.push_back(i);
        break;
      default:
        add(i, i + 1);
        break;
    }
  }
  std::sort(g.exits.begin(), g.exits.end());
  return g;
}

std::vector<std::size_t> reverse_postorder(const Cfg& g) {
  std::vector<std::size_t> post;
  if (g.size() == 0) return post;
  std::vector<bool> seen(g.size(), false);
  // Iterative DFS keeping successor cursors.
  std::vector<std::pair<std::size_t, std::size_t>> stack{{g.entry, 0}};
  seen[g.entry] = true;
  while (!stack.empty()) {
    auto& [node, cursor] = stack.back();
    if (cursor < g.succ[node].size()) {
      const std::size_t next = g.succ[node][cursor++];
      if (!seen[next]) {
        seen[next] = true;
        stack.push_back({next, 0});
      }
    } else {
      post.push_back(node);
      stack.pop_back();
    }
  }
  std::reverse(post.begin(), post.end());
  return post;
}

DomMatrix dominator_matrix(const Cfg& g) {
  const std::size_t n = g.size();
  DomMatrix dom(n, std::vector<bool>(n, true));
  if (n == 0) return dom;
  dom[g.entry].assign(n, false);
  dom[g.entry][g.entry] = true;
  const auto rpo = reverse_postorder(g);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t node : rpo) {
      if (node == g.entry) continue;
      std::vector<bool> next(n, true);
      for (std::size_t p : g.pred[node])
        for (std::size_t d = 0; d < n; ++d) next[d] = next[d] && dom[p][d];
      next[node] = true;
      if (next != dom[node]) {
        dom[node] = std::move(next);
        changed = true;
      }
    }
  }
  return dom;
}

std::map<Label, std::set<Label>> dominators(const Cfg& g) {
  const DomMatrix dom = dominator_matrix(g);
  std::map<Label, std::set<Label>> out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto& set = out[g.nodes[i]];
    for (std::size_t d = 0; d < g.size(); ++d)
      if (dom[i][d]) set.insert(g.nodes[d]);
  }
  return out;
}

DomMatrix postdominator_matrix(const Cfg& g) {
  const std::size_t n = g.size();
  const std::size_t exit = n;
  DomMatrix pdom(n + 1, std::vector<bool>(n + 1, true));
  pdom[exit].assign(n + 1, false);
  pdom[exit][exit] = true;
  // Reverse postorder of the reversed graph approximated by the reverse of
  // forward RPO; the fixpoint makes the order a performance detail only.
  auto order = reverse_postorder(g);
  std::reverse(order.begin(), order.end());
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t node : order) {
      std::vector<bool> next(n + 1, true);
      auto meet = [&](std::size_t s) {
        for (std::size_t d = 0; d <= n; ++d) next[d] = next[d] && pdom[s][d];
      };
      for (std::size_t s : g.succ[node]) meet(s);
      if (g.is_exit(node)) meet(exit);
      next[node] = true;
      if (next != pdom[node]) {
        pdom[node] = std::move(next);
        changed = true;
      }
    }
  }
  return pdom;
}

std::vector<std::size_t> immediate_postdominators(const Cfg& g) {
  const std::size_t n = g.size();
  const DomMatrix pdom = postdominator_matrix(g);
  std::vector<std::size_t> size(n + 1, 0);
  for (std::size_t i = 0; i <= n; ++i)
    size[i] = static_cast<std::size_t>(std::count(pdom[i].begin(), pdom[i].end(), true));
  std::vector<std::size_t> ipdom(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = n;
    std::size_t best_size = 0;
    for (std::size_t d = 0; d <= n; ++d) {
      if (d == i || !pdom[i][d]) continue;
      if (size[d] > best_size) {
        best = d;
        best_size = size[d];
      }
    }
    ipdom[i] = best;
  }
  return ipdom;
}

std::vector<std::vector<std::size_t>> control_dependences(const Cfg& g) {
  const std::size_t n = g.size();
  const DomMatrix pdom = postdominator_matrix(g);
  std::vector<std::vector<std::size_t>> controlled(n);
  for (std::size_t b = 0; b < n; ++b) {
    if (g.succ[b].size() + (g.is_exit(b) ? 1 : 0) < 2) continue;
    std::vector<bool> mark(n, false);
    for (std::size_t s : g.succ[b])
      for (std::size_t m = 0; m < n; ++m)
        if (pdom[s][m] && !(pdom[b][m] && m != b)) mark[m] = true;
    for (std::size_t m = 0; m < n; ++m)
      if (mark[m]) controlled[b].push_back(m);
  }
  return controlled;
}

CallGraph build_call_graph(const Program& p) {
  CallGraph cg;
  for (const auto& f : p.functions)
    for (const auto& s : f.body)
      if (s.kind == StmtKind::Call && p.function(s.callee))
        cg.edges.push_back({f.id, s.label, s.callee});
  return cg;
}

ReachingDefs reaching_definitions(const Function& f, const Cfg& g) {
  const std::size_t n = f.body.size();
  // Definition ids: one per (statement, defined local), then one entry
  // definition per local.
  struct Def {
    std::size_t stmt;  // n for entry definitions
    VarId var;
  };
  std::vector<Def> defs;
  std::map<VarId, std::vector<std::size_t>> defs_of_var;
  std::vector<std::vector<std::size_t>> gen(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& d : def_use(f.body[i]).defs)
      if (!d.is_field()) {
        gen[i].push_back(defs.size());
        defs_of_var[d.name].push_back(defs.size());
        defs.push_back({i, d.name});
      }
  std::vector<std::size_t> entry_defs;
  for (const auto& v : f.locals) {
    entry_defs.push_back(defs.size());
    defs_of_var[v].push_back(defs.size());
    defs.push_back({n, v});
  }
  const std::size_t D = defs.size();
  const std::size_t words = (D + 63) / 64;
  using Bits = std::vector<std::uint64_t>;
  auto set_bit = [](Bits& b, std::size_t i) { b[i / 64] |= (std::uint64_t{1} << (i % 64)); };
  auto test_bit = [](const Bits& b, std::size_t i) {
    return (b[i / 64] >> (i % 64)) & 1U;
  };
  std::vector<Bits> gen_bits(n, Bits(words, 0)), kill_bits(n, Bits(words, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d : gen[i]) {
      set_bit(gen_bits[i], d);
      for (std::size_t other : defs_of_var[defs[d].var]) set_bit(kill_bits[i], other);
    }
  Bits entry_bits(words, 0);
  for (std::size_t d : entry_defs) set_bit(entry_bits, d);

  std::vector<Bits> in(n, Bits(words, 0)), out(n, Bits(words, 0));
  const auto rpo = reverse_postorder(g);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t node : rpo) {
      Bits next_in(words, 0);
      if (node == g.entry) next_in = entry_bits;
      for (std::size_t p : g.pred[node])
        for (std::size_t w = 0; w < words; ++w) next_in[w] |= out[p][w];
      Bits next_out(words, 0);
      for (std::size_t w = 0; w < words; ++w)
        next_out[w] = gen_bits[node][w] | (next_in[w] & ~kill_bits[node][w]);
      if (next_in != in[node] || next_out != out[node]) {
        in[node] = std::move(next_in);
        out[node] = std::move(next_out);
        changed = true;
      }
    }
  }

  ReachingDefs rd;
  rd.reaching.resize(n);
  rd.entry.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& u : def_use(f.body[i]).uses) {
      if (u.is_field()) continue;
      auto& list = rd.reaching[i][u.name];
      for (std::size_t d : defs_of_var[u.name]) {
        if (!test_bit(in[i], d)) continue;
        if (defs[d].stmt == n)
          rd.entry[i].insert(u.name);
        else
          list.push_back(defs[d].stmt);
      }
      std::sort(list.begin(), list.end());
    }
  }
  return rd;
}

}  // namespace recon::mir
