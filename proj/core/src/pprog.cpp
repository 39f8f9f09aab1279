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

#include <algorithm>
#include <sstream>

#include "recon/codegen.hpp"
#include "recon/error.hpp"

namespace recon::codegen {

using mir::StmtKind;

namespace {

bool is_builtin(const std::string& name) {
  return name == "len" || name == "floor" || name == "sqrt" || name == "exp";
}

template <typename Fn>
void walk(const Block& b, Fn&& fn) {
  for (const auto& n : b) {
    fn(n);
    walk(n.body, fn);
    walk(n.orelse, fn);
  }
}

}  // namespace

const StructuredFunction* ProcessingProgram::function(std::string_view id) const {
  for (const auto& f : functions)
    if (f.id == id) return &f;
  return nullptr;
}

ProcessingProgram emit_program(const mir::Program& source,
                               const std::vector<StructuredFunction>& functions,
                               const std::vector<mir::FunctionId>& order) {
  ProcessingProgram out;
  out.functions = functions;
  out.order = order;
  std::set<std::string> inputs, outputs;
  std::set<mir::FieldId> fields;
  for (const auto& f : functions) {
    walk(f.body, [&](const Node& n) {
      const auto& s = n.stmt;
      if (n.kind != Node::Kind::Stmt) return;
      if (s.kind == StmtKind::FieldRead || s.kind == StmtKind::FieldWrite) fields.insert(s.field);
      if (s.kind != StmtKind::Call) return;
      auto ext = source.externs.find(s.callee);
      if (ext == source.externs.end()) return;
      out.externs.insert(*ext);
      if (ext->second == 0 && !s.dst.empty()) inputs.insert(s.callee);
      if (s.dst.empty() && !is_builtin(s.callee)) outputs.insert(s.callee);
    });
  }
  for (const auto& head : order)
    for (const auto& f : functions)
      if (f.id == head) inputs.insert(f.params.begin(), f.params.end());
  for (const auto& f : source.fields)
    if (fields.count(f)) out.fields.push_back(f);
  out.inputs.assign(inputs.begin(), inputs.end());
  out.outputs.assign(outputs.begin(), outputs.end());
  return out;
}

ProcessingProgram generate(const mir::Program& p,
                           const std::vector<slicing::ProcessingSlice>& slices,
                           SliceSelection which) {
  std::set<slicing::StmtRef> sliced;
  for (const auto& ps : slices) {
    if (which != SliceSelection::Post)
      sliced.insert(ps.pre.statements.begin(), ps.pre.statements.end());
    if (which != SliceSelection::Pre)
      sliced.insert(ps.post.statements.begin(), ps.post.statements.end());
  }
  const auto groups = group_functions(p, sliced);
  const auto order = order_heads(groups);
  std::set<mir::FunctionId> members;
  for (const auto& g : groups) members.insert(g.members.begin(), g.members.end());
  std::vector<StructuredFunction> functions;
  for (std::uint32_t fi = 0; fi < p.functions.size(); ++fi) {
    const auto& f = p.functions[fi];
    if (!members.count(f.id)) continue;
    std::set<mir::Label> keep;
    for (const auto& n : sliced)
      if (n.func == fi) keep.insert(f.body[n.index].label);
    functions.push_back(prune(reconstruct_loops(f), keep));
  }
  return emit_program(p, functions, order);
}

// ---------------------------------------------------------------------------
// Text form

namespace {

std::string cond_text(const mir::Statement& s) {
  return mir::format_operand(s.a) + " " + std::string(mir::to_string(s.binop)) + " " +
         mir::format_operand(s.b);
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + xs[i];
  return out;
}

void print_block(std::ostringstream& os, const Block& b, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  for (const auto& n : b) {
    switch (n.kind) {
      case Node::Kind::Stmt:
        os << pad << mir::print_statement(n.stmt) << "\n";
        break;
      case Node::Kind::If:
        os << pad << n.stmt.label << ": if " << cond_text(n.stmt) << " then\n";
        print_block(os, n.body, depth + 1);
        if (!n.orelse.empty()) {
          os << pad << "else\n";
          print_block(os, n.orelse, depth + 1);
        }
        os << pad << "end\n";
        break;
      case Node::Kind::While:
        os << pad << n.stmt.label << ": while " << cond_text(n.stmt) << " do\n";
        print_block(os, n.body, depth + 1);
        os << pad << "end\n";
        break;
    }
  }
}

}  // namespace

std::string print_pprog(const ProcessingProgram& p) {
  std::ostringstream os;
  os << "PPROG v1\n";
  for (const auto& [name, arity] : p.externs) os << "extern " << name << "/" << arity << "\n";
  for (const auto& f : p.fields) os << "field " << f << "\n";
  os << "inputs: " << join(p.inputs) << "\n";
  os << "outputs: " << join(p.outputs) << "\n";
  for (const auto& f : p.functions) {
    os << "func " << f.id << "(" << join(f.params) << "):\n";
    print_block(os, f.body, 1);
    os << "end\n";
  }
  os << "main:\n";
  for (const auto& h : p.order) os << "  call " << h << "()\n";
  return os.str();
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

class PprogParser {
 public:
  explicit PprogParser(std::string_view text) : text_(text) {}

  ProcessingProgram parse() {
    std::istringstream in{std::string(text_)};
    std::string raw;
    bool header = false, in_main = false;
    while (std::getline(in, raw)) {
      ++line_;
      const std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      if (!header) {
        if (line != "PPROG v1") error("expected 'PPROG v1' header");
        header = true;
        continue;
      }
      if (in_main) {
        if (line.rfind("call ", 0) != 0 || !ends_with(line, "()")) error("expected 'call NAME()'");
        const std::string name = trim(line.substr(5, line.size() - 7));
        if (!out_.function(name)) error("main invokes undefined function '" + name + "'");
        out_.order.push_back(name);
        continue;
      }
      if (!stack_.empty()) {
        body_line(line);
        continue;
      }
      if (line.rfind("extern ", 0) == 0) {
        const std::string decl = trim(line.substr(7));
        const auto slash = decl.find('/');
        if (slash == std::string::npos) error("expected extern NAME/ARITY");
        try {
          out_.externs[decl.substr(0, slash)] = std::stoi(decl.substr(slash + 1));
        } catch (const std::exception&) {
          error("bad extern arity");
        }
      } else if (line.rfind("field ", 0) == 0) {
        out_.fields.push_back(trim(line.substr(6)));
      } else if (line.rfind("inputs:", 0) == 0) {
        out_.inputs = split_list(line.substr(7));
      } else if (line.rfind("outputs:", 0) == 0) {
        out_.outputs = split_list(line.substr(8));
      } else if (line.rfind("func ", 0) == 0) {
        const auto open = line.find('('), close = line.rfind(')');
        if (open == std::string::npos || close == std::string::npos || close < open ||
            !ends_with(line, ":"))
          error("expected 'func NAME(params):'");
        StructuredFunction f;
        f.id = trim(line.substr(5, open - 5));
        f.params = split_list(line.substr(open + 1, close - open - 1));
        out_.functions.push_back(std::move(f));
        stack_.push_back({&out_.functions.back().body, nullptr});
      } else if (line == "main:") {
        in_main = true;
      } else {
        error("unexpected line '" + line + "'");
      }
    }
    if (!header) error("empty program");
    if (!stack_.empty()) error("unterminated function body");
    return std::move(out_);
  }

 private:
  struct Open {
    Block* block;
    Node* owner;  // enclosing if/while, null for the function body
  };

  [[noreturn]] void error(const std::string& msg) const {
    throw ParseError(ErrorKind::MalformedFile, line_, 1, msg);
  }

  void body_line(const std::string& line) {
    if (line == "end") {
      stack_.pop_back();
      return;
    }
    if (line == "else") {
      Node* owner = stack_.back().owner;
      if (!owner || owner->kind != Node::Kind::If || stack_.back().block != &owner->body)
        error("'else' outside an if");
      stack_.back().block = &owner->orelse;
      return;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) error("expected 'LABEL: statement'");
    const std::string label = trim(line.substr(0, colon));
    const std::string form = trim(line.substr(colon + 1));
    Block& into = *stack_.back().block;
    Node node;
    if (form.rfind("if ", 0) == 0 && ends_with(form, " then")) {
      node.kind = Node::Kind::If;
      node.stmt = condition(form.substr(3, form.size() - 8));
    } else if (form.rfind("while ", 0) == 0 && ends_with(form, " do")) {
      node.kind = Node::Kind::While;
      node.stmt = condition(form.substr(6, form.size() - 9));
    } else {
      try {
        node.stmt = mir::parse_statement_form(form, line_);
        mir::resolve_field_access(out_.fields, node.stmt);
      } catch (const ParseError&) {
        throw;
      } catch (const Error& e) {
        throw ParseError(e.kind(), line_, 1, e.detail());
      }
      if (node.stmt.kind == StmtKind::IfGoto || node.stmt.kind == StmtKind::Goto)
        error("gotos are not allowed in structured code");
    }
    node.stmt.label = label;
    node.stmt.line = line_;
    into.push_back(std::move(node));
    if (into.back().kind != Node::Kind::Stmt)
      stack_.push_back({&into.back().body, &into.back()});
  }

  mir::Statement condition(const std::string& text) {
    mir::Statement s = mir::parse_statement_form("if " + text + " goto end__", line_);
    s.target.clear();
    return s;
  }

  std::string_view text_;
  int line_ = 0;
  ProcessingProgram out_;
  std::vector<Open> stack_;
};

}  // namespace

ProcessingProgram parse_pprog(std::string_view text) {
  return PprogParser(text).parse();
}

interp::RunResult interpret(const ProcessingProgram& p, const interp::Environment& env) {
  mir::Program shim;
  shim.externs = p.externs;
  shim.fields = p.fields;
  for (const auto& f : p.functions) shim.functions.push_back({f.id, f.params, {}, {}});
  interp::Machine m(shim, env);
  std::size_t depth = 0;
  m.call_internal = [&](const std::string& callee, std::vector<interp::Value> args) {
    const StructuredFunction* f = p.function(callee);
    if (!f) fail(ErrorKind::UnresolvedCall, "call to undefined function '" + callee + "'");
    if (++depth > 256) fail(ErrorKind::StepLimitExceeded, "call depth limit exceeded");
    auto r = run_structured(*f, m, std::move(args));
    --depth;
    return r;
  };
  for (const auto& head : p.order) {
    const StructuredFunction* f = p.function(head);
    if (!f) fail(ErrorKind::UnresolvedCall, "head '" + head + "' is not defined");
    std::vector<interp::Value> args;
    for (const auto& param : f->params) {
      auto it = env.inputs.find(param);
      if (it == env.inputs.end())
        fail(ErrorKind::UnboundInput, "head parameter '" + param + "' not bound");
      args.push_back(it->second);
    }
    m.result.returned = run_structured(*f, m, std::move(args));
  }
  return std::move(m.result);
}

}  // namespace recon::codegen
