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

#include "recon/codegen.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "recon/error.hpp"

namespace recon::codegen {

using mir::BinOp;
using mir::StmtKind;

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// `a < b` fails exactly when `b <= a` holds, and so on.
mir::Statement inverted(mir::Statement cond) {
  switch (cond.binop) {
    case BinOp::Lt: cond.binop = BinOp::Le; std::swap(cond.a, cond.b); break;
    case BinOp::Le: cond.binop = BinOp::Lt; std::swap(cond.a, cond.b); break;
    case BinOp::Eq: cond.binop = BinOp::Ne; break;
    case BinOp::Ne: cond.binop = BinOp::Eq; break;
    default: throw std::logic_error("non-comparison condition");
  }
  return cond;
}

// `if c then {} else B` reads better as `if !c then B`.
void flip_empty_then(Node& n) {
  if (!n.body.empty() || n.orelse.empty()) return;
  n.stmt = inverted(n.stmt);
  std::swap(n.body, n.orelse);
}

mir::Statement condition_of(const mir::Statement& s) {
  mir::Statement c = s;
  c.target.clear();
  return c;
}

Node leaf(mir::Statement s, mir::Label origin = {}) {
  Node n;
  n.stmt = std::move(s);
  n.origin = std::move(origin);
  return n;
}

class Structurizer {
 public:
  Structurizer(const mir::Function& f, const mir::Cfg& g, const mir::DomMatrix& dom)
      : f_(f), g_(g), dom_(dom), n_(f.body.size()) {
    find_back_edges();
    find_loops();
    mir::Cfg dag = g_;
    for (std::size_t u = 0; u < n_; ++u) {
      auto& s = dag.succ[u];
      s.erase(std::remove_if(s.begin(), s.end(), [&](std::size_t v) { return is_back(u, v); }),
              s.end());
      if (s.empty() && !dag.is_exit(u)) dag.exits.push_back(u);
    }
    ipdom_ = mir::immediate_postdominators(dag);
  }

  Block run() { return gen(0, n_, kNone); }

 private:
  struct Loop {
    std::vector<bool> in;
    std::size_t x = 0, stay = 0, exit = 0;
  };

  bool is_back(std::size_t u, std::size_t v) const { return dom_[u][v]; }

  std::size_t target(std::size_t i) const { return *f_.find(f_.body[i].target); }

  void find_back_edges() {
    // Removing dominance back edges must leave an acyclic graph.
    std::vector<std::size_t> indeg(n_, 0);
    for (std::size_t u = 0; u < n_; ++u)
      for (std::size_t v : g_.succ[u])
        if (!is_back(u, v)) ++indeg[v];
    std::vector<std::size_t> ready;
    for (std::size_t v = 0; v < n_; ++v)
      if (indeg[v] == 0) ready.push_back(v);
    std::size_t seen = 0;
    while (!ready.empty()) {
      const std::size_t u = ready.back();
      ready.pop_back();
      ++seen;
      for (std::size_t v : g_.succ[u])
        if (!is_back(u, v) && --indeg[v] == 0) ready.push_back(v);
    }
    if (seen != n_)
      fail(ErrorKind::IrreducibleControlFlow,
           "function " + f_.id + " has a cycle whose entry does not dominate it");
  }

  // Straight-line code ending in a return. Leaving a loop this way is an
  // early return, not a loop exit; the tail is duplicated into the body.
  bool returns_directly(std::size_t v) const {
    for (std::size_t steps = 0; steps <= n_; ++steps) {
      if (v >= n_) return true;  // falls off the end
      switch (f_.body[v].kind) {
        case StmtKind::Return: return true;
        case StmtKind::IfGoto: return false;
        case StmtKind::Goto: v = target(v); break;
        default: ++v; break;
      }
    }
    return false;
  }

  void find_loops() {
    for (std::size_t u = 0; u < n_; ++u)
      for (std::size_t h : g_.succ[u])
        if (is_back(u, h)) sources_[h].push_back(u);
    for (const auto& [h, srcs] : sources_) {
      Loop loop;
      loop.in.assign(n_, false);
      loop.in[h] = true;
      std::vector<std::size_t> work;
      for (std::size_t s : srcs)
        if (!loop.in[s]) {
          loop.in[s] = true;
          work.push_back(s);
        }
      while (!work.empty()) {
        const std::size_t v = work.back();
        work.pop_back();
        for (std::size_t p : g_.pred[v])
          if (!loop.in[p]) {
            loop.in[p] = true;
            work.push_back(p);
          }
      }
      // Exits into straight-line return code count only when nothing else
      // leaves the loop.
      std::vector<std::size_t> exiting, returning;
      for (std::size_t u = 0; u < n_; ++u) {
        if (!loop.in[u]) continue;
        bool out = false, ret = false;
        for (std::size_t v : g_.succ[u]) {
          if (loop.in[v]) continue;
          (returns_directly(v) ? ret : out) = true;
        }
        if (out) exiting.push_back(u);
        if (ret && !out) returning.push_back(u);
      }
      if (exiting.empty() && returning.size() > 1) {
        // Every way out returns: the latch test is the loop condition.
        std::vector<std::size_t> latch;
        for (std::size_t u : returning)
          if (std::find(srcs.begin(), srcs.end(), u) != srcs.end()) latch.push_back(u);
        if (latch.empty() && std::find(returning.begin(), returning.end(), h) != returning.end())
          latch.push_back(h);
        returning = latch;
      }
      if (exiting.empty()) exiting = returning;
      const std::string where = "loop at " + f_.body[h].label + " in " + f_.id;
      if (exiting.size() != 1 || f_.body[exiting[0]].kind != StmtKind::IfGoto)
        fail(ErrorKind::UnsupportedLoop, where + " needs exactly one exiting condition");
      loop.x = exiting[0];
      const std::size_t t = target(loop.x), ft = loop.x + 1;
      loop.stay = loop.in[t] ? t : ft;
      loop.exit = loop.in[t] ? ft : t;
      if (loop.x != h) {
        // Every iteration has to pass the exiting condition.
        std::vector<bool> seen(n_, false);
        std::vector<std::size_t> stack{h};
        seen[h] = true;
        while (!stack.empty()) {
          const std::size_t v = stack.back();
          stack.pop_back();
          for (std::size_t w : g_.succ[v]) {
            if (w == h && v != loop.x)
              fail(ErrorKind::UnsupportedLoop, where + " can iterate without its exit test");
            if (w == loop.x || w == h || !loop.in[w] || seen[w]) continue;
            seen[w] = true;
            stack.push_back(w);
          }
        }
      }
      loops_.emplace(h, std::move(loop));
    }
  }

  Block gen(std::size_t n, std::size_t stop, std::size_t skip_header) {
    Block out;
    while (n != stop && n < n_) {
      if (n != skip_header && loops_.count(n)) {
        emit_loop(n, out);
        n = loops_.at(n).exit;
        continue;
      }
      skip_header = kNone;
      const auto& s = f_.body[n];
      switch (s.kind) {
        case StmtKind::Goto:
          n = target(n);
          break;
        case StmtKind::Return:
          out.push_back(leaf(s));
          n = n_;
          break;
        case StmtKind::IfGoto: {
          std::size_t m = ipdom_[n];
          if (m >= n_) m = stop;
          Node node;
          node.kind = Node::Kind::If;
          node.stmt = condition_of(s);
          node.body = gen(target(n), m, kNone);
          node.orelse = gen(n + 1, m, kNone);
          flip_empty_then(node);
          out.push_back(std::move(node));
          n = m;
          break;
        }
        default:
          out.push_back(leaf(s));
          ++n;
          break;
      }
    }
    return out;
  }

  void emit_loop(std::size_t h, Block& out) {
    const Loop& loop = loops_.at(h);
    const auto& xs = f_.body[loop.x];
    mir::Statement stay = condition_of(xs);
    if (loop.stay != target(loop.x)) stay = inverted(stay);
    Node w;
    w.kind = Node::Kind::While;
    if (loop.x == h) {
      w.stmt = stay;
      w.body = gen(loop.stay, h, kNone);
      out.push_back(std::move(w));
      return;
    }
    // Exit test in the middle: run the head part, then test, then the tail.
    const std::string var = "loop__" + xs.label;
    const auto flag = mir::Operand::var(var);
    const auto zero = mir::Operand::lit(mir::Scalar{std::int64_t{0}});

    mir::Statement init;
    init.label = "i__" + xs.label;
    init.kind = StmtKind::AssignConst;
    init.dst = var;
    init.a = mir::Operand::lit(mir::Scalar{std::int64_t{1}});
    out.push_back(leaf(init, xs.label));

    mir::Statement test = stay;
    test.label = "f__" + xs.label;
    test.kind = StmtKind::AssignBinop;
    test.dst = var;

    mir::Statement again;
    again.label = "g__" + xs.label;
    again.kind = StmtKind::IfGoto;
    again.a = flag;
    again.binop = BinOp::Ne;
    again.b = zero;

    w.stmt = again;
    w.stmt.label = "w__" + xs.label;
    w.origin = xs.label;
    w.body = gen(h, loop.x, h);
    w.body.push_back(leaf(test, xs.label));
    Node tail;
    tail.kind = Node::Kind::If;
    tail.stmt = again;
    tail.origin = xs.label;
    tail.body = gen(loop.stay, h, kNone);
    w.body.push_back(std::move(tail));
    out.push_back(std::move(w));
  }

  const mir::Function& f_;
  const mir::Cfg& g_;
  const mir::DomMatrix& dom_;
  std::size_t n_;
  std::map<std::size_t, std::vector<std::size_t>> sources_;
  std::map<std::size_t, Loop> loops_;
  std::vector<std::size_t> ipdom_;
};

bool has_kept_work(const Block& b) {
  for (const auto& n : b)
    if (n.kind != Node::Kind::Stmt || n.stmt.kind != StmtKind::Return) return true;
  return false;
}

Block prune_block(const Block& in, const std::set<mir::Label>& keep) {
  Block out;
  for (const auto& n : in) {
    const bool kept = keep.count(n.key()) > 0;
    if (n.kind == Node::Kind::Stmt) {
      if (n.stmt.kind == StmtKind::Return) {
        Node r = n;
        if (!kept) r.stmt.has_value = false;
        out.push_back(std::move(r));
      } else if (kept) {
        out.push_back(n);
      }
      continue;
    }
    Node c = n;
    c.body = prune_block(n.body, keep);
    c.orelse = prune_block(n.orelse, keep);
    if (kept) {
      if (c.kind == Node::Kind::If) flip_empty_then(c);
      out.push_back(std::move(c));
    } else if (has_kept_work(c.body) || has_kept_work(c.orelse)) {
      throw std::logic_error("sliced statements under unsliced condition " + n.key());
    }
  }
  return out;
}

enum class Flow { Normal, Returned };

class StructuredRunner {
 public:
  StructuredRunner(interp::Machine& m, interp::Frame& frame, const std::string& func)
      : m_(m), frame_(frame), func_(func) {}

  Flow block(const Block& b) {
    for (const auto& n : b)
      if (node(n) == Flow::Returned) return Flow::Returned;
    return Flow::Normal;
  }

  std::optional<interp::Value> ret;

 private:
  Flow node(const Node& n) {
    switch (n.kind) {
      case Node::Kind::Stmt:
        m_.tick();
        if (n.stmt.kind == StmtKind::Return) {
          if (n.stmt.has_value) ret = m_.operand(n.stmt.a, frame_);
          return Flow::Returned;
        }
        m_.exec(n.stmt, frame_, func_);
        return Flow::Normal;
      case Node::Kind::If:
        m_.tick();
        return block(m_.condition(n.stmt, frame_) ? n.body : n.orelse);
      case Node::Kind::While:
        for (;;) {
          m_.tick();
          if (!m_.condition(n.stmt, frame_)) return Flow::Normal;
          if (block(n.body) == Flow::Returned) return Flow::Returned;
        }
    }
    return Flow::Normal;
  }

  interp::Machine& m_;
  interp::Frame& frame_;
  const std::string& func_;
};

}  // namespace

StructuredFunction reconstruct_loops(const mir::Function& f, const mir::Cfg& g,
                                     const mir::DomMatrix& dom) {
  return {f.id, f.params, Structurizer(f, g, dom).run()};
}

StructuredFunction reconstruct_loops(const mir::Function& f) {
  const mir::Cfg g = mir::build_cfg(f);
  return reconstruct_loops(f, g, mir::dominator_matrix(g));
}

StructuredFunction prune(const StructuredFunction& f, const std::set<mir::Label>& keep) {
  return {f.id, f.params, prune_block(f.body, keep)};
}

std::size_t count_loops(const Block& b) {
  std::size_t n = 0;
  for (const auto& node : b)
    n += (node.kind == Node::Kind::While) + count_loops(node.body) + count_loops(node.orelse);
  return n;
}

std::optional<interp::Value> run_structured(const StructuredFunction& f, interp::Machine& m,
                                            std::vector<interp::Value> args) {
  interp::Frame frame;
  for (std::size_t k = 0; k < f.params.size() && k < args.size(); ++k)
    frame[f.params[k]] = std::move(args[k]);
  StructuredRunner r(m, frame, f.id);
  r.block(f.body);
  return r.ret;
}

std::vector<FunctionGroup> group_functions(const mir::Program& p,
                                           const std::set<slicing::StmtRef>& sliced) {
  const std::size_t nf = p.functions.size();
  std::vector<bool> member(nf, false);
  std::vector<std::set<std::size_t>> calls(nf), callers(nf);
  for (const auto& n : sliced) member[n.func] = true;
  // Callees of sliced call sites belong even when none of their own
  // statements were sliced.
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& n : sliced) {
      const auto& s = p.functions[n.func].body[n.index];
      if (s.kind != StmtKind::Call) continue;
      auto g = p.function_index(s.callee);
      if (!g) continue;
      if (!member[*g]) grew = member[*g] = true;
      if (*g != n.func) {
        calls[n.func].insert(*g);
        callers[*g].insert(n.func);
      }
    }
  }
  std::vector<std::size_t> parent(nf);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t g : calls[f]) parent[find(f)] = find(g);

  auto reach = [&](std::size_t from) {
    std::set<std::size_t> seen{from};
    std::deque<std::size_t> q{from};
    while (!q.empty()) {
      const std::size_t v = q.front();
      q.pop_front();
      for (std::size_t w : calls[v])
        if (seen.insert(w).second) q.push_back(w);
    }
    return seen.size();
  };

  std::vector<FunctionGroup> groups;
  std::map<std::size_t, std::size_t> group_of_root;
  for (std::size_t f = 0; f < nf; ++f) {
    if (!member[f]) continue;
    auto [it, fresh] = group_of_root.try_emplace(find(f), groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].members.insert(p.functions[f].id);
  }
  for (auto& grp : groups) {
    std::vector<std::size_t> idx;
    for (std::size_t f = 0; f < nf; ++f)
      if (grp.members.count(p.functions[f].id)) idx.push_back(f);
    std::vector<std::size_t> heads;
    for (std::size_t f : idx)
      if (callers[f].empty()) heads.push_back(f);
    if (heads.empty()) heads = idx;  // mutual recursion
    std::size_t best = heads.front(), best_reach = reach(best);
    for (std::size_t f : heads)
      if (const std::size_t r = reach(f); r > best_reach) {
        best = f;
        best_reach = r;
      }
    grp.head = p.functions[best].id;
  }
  for (const auto& n : sliced) {
    const auto& s = p.functions[n.func].body[n.index];
    auto& grp = groups[group_of_root.at(find(n.func))];
    if (s.kind == StmtKind::FieldRead) grp.reads.insert(s.field);
    if (s.kind == StmtKind::FieldWrite) grp.writes.insert(s.field);
  }
  for (auto& grp : groups)
    for (const auto& w : grp.writes) grp.reads.erase(w);
  return groups;
}

std::vector<mir::FunctionId> order_heads(const std::vector<FunctionGroup>& groups) {
  std::vector<FunctionGroup> rest = groups;
  std::vector<mir::FunctionId> order;
  while (!rest.empty()) {
    auto it = std::find_if(rest.begin(), rest.end(),
                           [](const FunctionGroup& g) { return g.reads.empty(); });
    if (it == rest.end()) {
      std::string detail;
      for (const auto& g : rest) {
        detail += " " + g.head + " reads {";
        bool first = true;
        for (const auto& f : g.reads) {
          detail += (first ? "" : ", ") + f;
          first = false;
        }
        detail += "}";
      }
      fail(ErrorKind::UnsatisfiableOrder, "no write-before-read order:" + detail);
    }
    const FunctionGroup placed = *it;
    rest.erase(it);
    order.push_back(placed.head);
    for (auto& g : rest)
      for (const auto& w : placed.writes) g.reads.erase(w);
  }
  return order;
}

}  // namespace recon::codegen
