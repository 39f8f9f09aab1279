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

#include "recon/slicer.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_set>

#include "recon/error.hpp"

namespace recon::slicing {

namespace {

using mir::StmtKind;
using mir::ValueRef;

constexpr std::size_t kNoCtx = static_cast<std::size_t>(-1);

std::uint64_t key(std::size_t a, std::size_t b) {
  return (static_cast<std::uint64_t>(a) << 32) ^ static_cast<std::uint32_t>(b);
}

// Backward closure over the basis. Contexts are the flat id of the call site
// that entered the current callee, or kNoCtx when unknown.
class Backward {
 public:
  explicit Backward(const SlicingBasis& b) : b_(b) {}

  // Statements (with any context) that this walk must not enter.
  std::function<bool(StmtRef, std::size_t)> skip;

  void include(StmtRef n, std::size_t ctx) {
    if (skip && skip(n, ctx)) return;
    if (!seen_.insert(key(b_.flat(n), ctx)).second) return;
    out.insert(n);
    for (const auto& v : b_.def_use(n).uses) fact(n, v, ctx);
    needs_context(n, ctx);
  }

  // Control parents and the call sites that make n execute at all.
  void needs_context(StmtRef n, std::size_t ctx) {
    for (std::size_t e : b_.in_edges(n)) {
      const auto& edge = b_.edges()[e];
      if (edge.kind == EdgeKind::BranchControl) include(edge.src, ctx);
    }
    sites(n.func, ctx);
  }

  void sites(std::uint32_t func, std::size_t ctx) {
    if (ctx != kNoCtx) {
      include(b_.unflat(ctx), kNoCtx);
      return;
    }
    for (const auto& cs : b_.call_sites(func)) include(cs, kNoCtx);
  }

  void fact(StmtRef n, const ValueRef& v, std::size_t ctx) {
    if (!facts_.insert({b_.flat(n), ctx, v}).second) return;
    if (v.is_field()) {
      for (std::size_t e : b_.in_edges(n)) {
        const auto& edge = b_.edges()[e];
        if (edge.kind == EdgeKind::FieldDefUse && edge.value == v)
          include(edge.src, kNoCtx);
      }
      return;
    }
    for (std::size_t e : b_.in_edges(n)) {
      const auto& edge = b_.edges()[e];
      if (edge.kind != EdgeKind::LocalDefUse || edge.value != v) continue;
      include(edge.src, ctx);
      const auto& d = b_.stmt(edge.src);
      if (auto g = b_.callee(edge.src); g && d.dst == v.name) {
        for (const auto& x : b_.exits(*g))
          if (b_.stmt(x).kind == StmtKind::Return && b_.stmt(x).has_value)
            include(x, b_.flat(edge.src));
      }
    }
    if (b_.param_reaches(n, v.name)) sites(n.func, ctx);
  }

  std::set<StmtRef> out;

 private:
  struct FactKey {
    std::size_t n, ctx;
    ValueRef v;
    friend auto operator<=>(const FactKey&, const FactKey&) = default;
  };
  const SlicingBasis& b_;
  std::unordered_set<std::uint64_t> seen_;
  std::set<FactKey> facts_;
};

class Forward {
 public:
  explicit Forward(const SlicingBasis& b) : b_(b) {}

  void taint(StmtRef n, std::size_t ctx) {
    if (!seen_.insert(key(b_.flat(n), ctx)).second) return;
    out.insert(n);
    visited.emplace_back(n, ctx);
    for (const auto& v : b_.def_use(n).defs) fact(n, v, ctx);
    const auto& s = b_.stmt(n);
    if (s.kind == StmtKind::IfGoto) {
      for (std::size_t e : b_.out_edges(n)) {
        const auto& edge = b_.edges()[e];
        if (edge.kind == EdgeKind::BranchControl) control(edge.dst, ctx);
      }
    }
    if (s.kind == StmtKind::Return && s.has_value) {
      if (ctx != kNoCtx) {
        taint(b_.unflat(ctx), kNoCtx);
      } else {
        for (const auto& cs : b_.call_sites(n.func)) taint(cs, kNoCtx);
      }
    }
  }

  // n runs or not depending on the criterion. Inside a called function that
  // holds for everything not guarded by a branch of its own.
  void control(StmtRef n, std::size_t ctx) {
    taint(n, ctx);
    const auto g = b_.callee(n);
    if (!g || !expanded_.insert(key(b_.flat(n), ctx)).second) return;
    const auto& body = b_.program().functions[*g].body;
    for (std::uint32_t i = 0; i < body.size(); ++i) {
      const StmtRef m{*g, i};
      bool guarded = false;
      for (std::size_t e : b_.in_edges(m)) {
        const auto& edge = b_.edges()[e];
        guarded |= edge.kind == EdgeKind::BranchControl && edge.src != m;
      }
      if (!guarded) control(m, b_.flat(n));
    }
  }

  void fact(StmtRef n, const ValueRef& v, std::size_t ctx) {
    for (std::size_t e : b_.out_edges(n)) {
      const auto& edge = b_.edges()[e];
      if (edge.value != v) continue;
      if (edge.kind == EdgeKind::FieldDefUse) {
        taint(edge.dst, kNoCtx);
      } else if (edge.kind == EdgeKind::LocalDefUse) {
        taint(edge.dst, ctx);
        const auto& u = b_.stmt(edge.dst);
        if (auto g = b_.callee(edge.dst)) {
          for (std::size_t k = 0; k < u.args.size(); ++k)
            if (u.args[k].is_var() && u.args[k].name() == v.name)
              for (const auto& user : b_.entry_users(*g, k))
                taint(user, b_.flat(edge.dst));
        }
      }
    }
  }

  std::set<StmtRef> out;
  std::vector<std::pair<StmtRef, std::size_t>> visited;

 private:
  const SlicingBasis& b_;
  std::unordered_set<std::uint64_t> seen_;
  std::unordered_set<std::uint64_t> expanded_;
};

}  // namespace

SliceSet slice_backward(const SlicingBasis& b, const SlicingCriterion& c) {
  SliceSet result{{c.stmt}, c};
  if (c.values.empty()) return result;
  Backward walk(b);
  for (const auto& v : c.values) walk.fact(c.stmt, v, kNoCtx);
  walk.needs_context(c.stmt, kNoCtx);
  result.statements.insert(walk.out.begin(), walk.out.end());
  return result;
}

SliceSet slice_forward(const SlicingBasis& b, const SlicingCriterion& c) {
  SliceSet result{{c.stmt}, c};
  if (c.values.empty()) return result;
  Forward fwd(b);
  for (const auto& v : c.values) fwd.fact(c.stmt, v, kNoCtx);
  result.statements.insert(fwd.out.begin(), fwd.out.end());

  // Values the newly sliced statements need but the forward walk did not
  // produce come from a supplementary backward walk.
  Backward sup(b);
  const std::set<StmtRef> forward = result.statements;
  sup.skip = [&](StmtRef n, std::size_t) { return forward.count(n) > 0; };
  for (const auto& [n, ctx] : fwd.visited) {
    if (n == c.stmt) continue;
    for (const auto& v : b.def_use(n).uses) sup.fact(n, v, ctx);
    sup.needs_context(n, ctx);
  }
  result.statements.insert(sup.out.begin(), sup.out.end());
  return result;
}

std::vector<ProcessingSlice> extract_processing(
    const SlicingBasis& b, const std::vector<SlicingCriterion>& criteria) {
  std::map<StmtRef, ProcessingSlice> by_site;
  for (const auto& c : criteria) {
    auto [it, fresh] = by_site.try_emplace(c.stmt);
    auto& ps = it->second;
    if (fresh) {
      ps.site = c.stmt;
      ps.pre = {{c.stmt}, {c.stmt, {}, Direction::Backward}};
      ps.post = {{c.stmt}, {c.stmt, {}, Direction::Forward}};
    }
    if (c.direction == Direction::Backward)
      ps.pre = slice_backward(b, c);
    else
      ps.post = slice_forward(b, c);
  }
  std::vector<ProcessingSlice> out;
  for (auto& [site, ps] : by_site) out.push_back(std::move(ps));
  return out;
}

namespace {

void list_grouped(std::ostringstream& os, const SlicingBasis& b,
                  const std::set<StmtRef>& stmts) {
  std::uint32_t current = static_cast<std::uint32_t>(-1);
  for (const auto& n : stmts) {
    if (n.func != current) {
      current = n.func;
      os << "    " << b.program().functions[n.func].id << ":\n";
    }
    os << "      " << mir::print_statement(b.stmt(n)) << "\n";
  }
}

}  // namespace

std::string format_slice_report(const SlicingBasis& b,
                                const std::vector<ProcessingSlice>& slices) {
  std::ostringstream os;
  for (const auto& ps : slices) {
    os << "site " << b.qualified(ps.site) << "\n";
    os << "  pre (" << ps.pre.statements.size() << " statements, from "
       << mir::format_value_set(ps.pre.seed.values) << ")\n";
    list_grouped(os, b, ps.pre.statements);
    os << "  post (" << ps.post.statements.size() << " statements, from "
       << mir::format_value_set(ps.post.seed.values) << ")\n";
    list_grouped(os, b, ps.post.statements);
  }
  return os.str();
}

std::string format_slice_list(const SlicingBasis& b,
                              const std::vector<ProcessingSlice>& slices) {
  std::ostringstream os;
  for (const auto& ps : slices) {
    os << "site " << b.qualified(ps.site) << "\n";
    for (const auto& n : ps.pre.statements) os << "pre " << b.qualified(n) << "\n";
    for (const auto& n : ps.post.statements) os << "post " << b.qualified(n) << "\n";
  }
  return os.str();
}

std::vector<SliceListEntry> parse_slice_list(std::string_view text) {
  std::vector<SliceListEntry> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag, q, extra;
    ls >> tag >> q;
    if (q.empty() || (ls >> extra) || q.find(':') == std::string::npos)
      throw ParseError(ErrorKind::MalformedFile, line_no, 1, "bad slice list line");
    if (tag == "site") {
      out.push_back({q, {}, {}});
    } else if (out.empty()) {
      throw ParseError(ErrorKind::MalformedFile, line_no, 1, "entry before any site");
    } else if (tag == "pre") {
      out.back().pre.push_back(q);
    } else if (tag == "post") {
      out.back().post.push_back(q);
    } else {
      throw ParseError(ErrorKind::MalformedFile, line_no, 1, "unknown tag '" + tag + "'");
    }
  }
  return out;
}

std::vector<ProcessingSlice> resolve_slice_list(
    const SlicingBasis& b, const std::vector<SliceListEntry>& entries) {
  auto resolve = [&](const std::string& q) {
    auto n = b.resolve(q);
    if (!n) fail(ErrorKind::UnresolvedLabel, "slice list names unknown statement " + q);
    return *n;
  };
  std::vector<ProcessingSlice> out;
  for (const auto& e : entries) {
    ProcessingSlice ps;
    ps.site = resolve(e.site);
    const auto& du = b.def_use(ps.site);
    ps.pre.seed = {ps.site, du.uses, Direction::Backward};
    ps.post.seed = {ps.site, du.defs, Direction::Forward};
    ps.pre.statements.insert(ps.site);
    ps.post.statements.insert(ps.site);
    for (const auto& q : e.pre) ps.pre.statements.insert(resolve(q));
    for (const auto& q : e.post) ps.post.statements.insert(resolve(q));
    out.push_back(std::move(ps));
  }
  return out;
}

}  // namespace recon::slicing
