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

#include "recon/mir.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <deque>
#include <sstream>

#include "recon/error.hpp"

namespace recon::mir {

std::string_view to_string(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Rem: return "%";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Shr: return ">>";
    case BinOp::Shl: return "<<";
  }
  return "?";
}

std::string_view to_string(UnOp op) {
  switch (op) {
    case UnOp::Neg: return "neg";
    case UnOp::Not: return "not";
    case UnOp::Int2Float: return "int2float";
    case UnOp::Float2Int: return "float2int";
    case UnOp::Copy: return "";
  }
  return "?";
}

bool is_comparison(BinOp op) {
  return op == BinOp::Lt || op == BinOp::Le || op == BinOp::Eq ||
         op == BinOp::Ne;
}

std::optional<std::size_t> Function::find(std::string_view label) const {
  for (std::size_t i = 0; i < body.size(); ++i)
    if (body[i].label == label) return i;
  return std::nullopt;
}

const Function* Program::function(std::string_view id) const {
  for (const auto& f : functions)
    if (f.id == id) return &f;
  return nullptr;
}

std::optional<std::size_t> Program::function_index(std::string_view id) const {
  for (std::size_t i = 0; i < functions.size(); ++i)
    if (functions[i].id == id) return i;
  return std::nullopt;
}

bool Program::is_extern(std::string_view name) const {
  return externs.find(std::string(name)) != externs.end();
}

namespace {

void add_operand(ValueSet& set, const Operand& op) {
  if (op.is_var()) set.insert(ValueRef::var(op.name()));
}

}  // namespace

DefUse def_use(const Statement& s) {
  DefUse du;
  switch (s.kind) {
    case StmtKind::AssignConst:
      du.defs.insert(ValueRef::var(s.dst));
      break;
    case StmtKind::AssignBinop:
      du.defs.insert(ValueRef::var(s.dst));
      add_operand(du.uses, s.a);
      add_operand(du.uses, s.b);
      break;
    case StmtKind::AssignUnop:
    case StmtKind::ArrayNew:
      du.defs.insert(ValueRef::var(s.dst));
      add_operand(du.uses, s.a);
      break;
    case StmtKind::Call:
      if (!s.dst.empty()) du.defs.insert(ValueRef::var(s.dst));
      for (const auto& arg : s.args) add_operand(du.uses, arg);
      break;
    case StmtKind::FieldRead:
      du.defs.insert(ValueRef::var(s.dst));
      du.uses.insert(ValueRef::field(s.field));
      if (!s.receiver.empty()) du.uses.insert(ValueRef::var(s.receiver));
      break;
    case StmtKind::FieldWrite:
      du.defs.insert(ValueRef::field(s.field));
      add_operand(du.uses, s.a);
      if (!s.receiver.empty()) du.uses.insert(ValueRef::var(s.receiver));
      break;
    case StmtKind::ArrayRead:
      du.defs.insert(ValueRef::var(s.dst));
      du.uses.insert(ValueRef::var(s.array));
      add_operand(du.uses, s.a);
      break;
    case StmtKind::ArrayWrite:
      du.defs.insert(ValueRef::var(s.array));
      du.uses.insert(ValueRef::var(s.array));
      add_operand(du.uses, s.a);
      add_operand(du.uses, s.b);
      break;
    case StmtKind::IfGoto:
      add_operand(du.uses, s.a);
      add_operand(du.uses, s.b);
      break;
    case StmtKind::Goto:
      break;
    case StmtKind::Return:
      if (s.has_value) add_operand(du.uses, s.a);
      break;
  }
  return du;
}

std::string format_scalar(const Scalar& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value))
    return std::to_string(*i);
  const double d = std::get<double>(value);
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), d);
  std::string out(buf, res.ptr);
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

std::string format_value_set(const ValueSet& values) {
  std::string out = "{";
  bool first = true;
  for (const auto& v : values) {
    if (!first) out += ", ";
    first = false;
    out += v.is_field() ? "field " + v.name : v.name;
  }
  return out + "}";
}

// ---------------------------------------------------------------------------
// Lexing

namespace {

enum class Tok { Ident, Number, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int col = 0;
};

const std::set<std::string, std::less<>> kKeywords = {
    "const", "call", "newarray", "neg", "not", "int2float", "float2int",
    "if", "goto", "return", "func", "extern", "field", "entry"};

class LineLexer {
 public:
  LineLexer(std::string_view text, int line) : line_(line) { lex(text); }

  const Token& peek(std::size_t ahead = 0) const {
    return pos_ + ahead < toks_.size() ? toks_[pos_ + ahead] : end_;
  }
  Token next() {
    Token t = peek();
    if (pos_ < toks_.size()) ++pos_;
    return t;
  }
  bool at_end() const { return pos_ >= toks_.size(); }
  bool accept(std::string_view punct) {
    if (peek().kind != Tok::End && peek().kind != Tok::Number &&
        peek().text == punct) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(std::string_view punct) {
    if (!accept(punct))
      error("expected '" + std::string(punct) + "'", peek().col);
  }
  std::string ident(std::string_view what) {
    const Token& t = peek();
    if (t.kind != Tok::Ident || kKeywords.count(t.text))
      error("expected " + std::string(what), t.col);
    return next().text;
  }
  std::string label() {
    const Token& t = peek();
    if (t.kind == Tok::Ident && !kKeywords.count(t.text)) return next().text;
    if (t.kind == Tok::Number &&
        std::all_of(t.text.begin(), t.text.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      return next().text;
    error("expected label", t.col);
  }
  std::vector<Token> rest() {
    std::vector<Token> r(toks_.begin() + static_cast<long>(pos_), toks_.end());
    pos_ = toks_.size();
    return r;
  }
  std::size_t position() const { return pos_; }
  void reset(std::size_t p) { pos_ = p; }
  int line() const { return line_; }

  [[noreturn]] void error(const std::string& msg, int col) const {
    throw ParseError(ErrorKind::Syntax, line_, col, msg);
  }

 private:
  void lex(std::string_view s) {
    std::size_t i = 0;
    end_.col = static_cast<int>(s.size()) + 1;
    while (i < s.size()) {
      const char c = s[i];
      if (c == '#') break;
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      const int col = static_cast<int>(i) + 1;
      const bool prev_operand =
          !toks_.empty() &&
          ((toks_.back().kind == Tok::Ident && !kKeywords.count(toks_.back().text)) ||
           toks_.back().kind == Tok::Number || toks_.back().text == ")" ||
           toks_.back().text == "]");
      const bool signed_number = c == '-' && i + 1 < s.size() &&
                                 std::isdigit(static_cast<unsigned char>(s[i + 1])) &&
                                 !prev_operand;
      if (std::isdigit(static_cast<unsigned char>(c)) || signed_number) {
        std::size_t j = i + 1;
        while (j < s.size()) {
          const char d = s[j];
          if (std::isalnum(static_cast<unsigned char>(d)) || d == '.' || d == '_') {
            ++j;
          } else if ((d == '-' || d == '+') && (s[j - 1] == 'e' || s[j - 1] == 'E')) {
            ++j;
          } else {
            break;
          }
        }
        toks_.push_back({Tok::Number, std::string(s.substr(i, j - i)), col});
        i = j;
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t j = i + 1;
        while (j < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_'))
          ++j;
        toks_.push_back({Tok::Ident, std::string(s.substr(i, j - i)), col});
        i = j;
        continue;
      }
      static const char* kTwo[] = {"<=", "==", "!=", ">>", "<<", ">="};
      bool matched = false;
      for (const char* two : kTwo) {
        if (s.substr(i, 2) == two) {
          toks_.push_back({Tok::Punct, two, col});
          i += 2;
          matched = true;
          break;
        }
      }
      if (matched) continue;
      if (std::string_view("=,()[].:/+-*%<>").find(c) != std::string_view::npos) {
        toks_.push_back({Tok::Punct, std::string(1, c), col});
        ++i;
        continue;
      }
      throw ParseError(ErrorKind::Syntax, line_, col,
                       std::string("unexpected character '") + c + "'");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int line_;
  Token end_;
};

Scalar parse_number(const Token& t, int line) {
  const std::string& s = t.text;
  const bool is_float = s.find_first_of(".eE") != std::string::npos;
  if (!is_float) {
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ParseError(ErrorKind::Syntax, line, t.col, "bad integer '" + s + "'");
    return v;
  }
  double d = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), d);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError(ErrorKind::Syntax, line, t.col, "bad float '" + s + "'");
  return d;
}

Operand parse_operand(LineLexer& lx) {
  const Token& t = lx.peek();
  if (t.kind == Tok::Number) return Operand::lit(parse_number(lx.next(), lx.line()));
  return Operand::var(lx.ident("variable or constant"));
}

std::optional<BinOp> binop_of(const Token& t) {
  if (t.kind != Tok::Punct) return std::nullopt;
  static const std::pair<const char*, BinOp> kOps[] = {
      {"+", BinOp::Add}, {"-", BinOp::Sub}, {"*", BinOp::Mul},
      {"/", BinOp::Div}, {"%", BinOp::Rem}, {"<", BinOp::Lt},
      {"<=", BinOp::Le}, {"==", BinOp::Eq}, {"!=", BinOp::Ne},
      {">>", BinOp::Shr}, {"<<", BinOp::Shl}};
  for (const auto& [text, op] : kOps)
    if (t.text == text) return op;
  return std::nullopt;
}

std::optional<UnOp> unop_of(const Token& t) {
  if (t.kind != Tok::Ident) return std::nullopt;
  if (t.text == "neg") return UnOp::Neg;
  if (t.text == "not") return UnOp::Not;
  if (t.text == "int2float") return UnOp::Int2Float;
  if (t.text == "float2int") return UnOp::Float2Int;
  return std::nullopt;
}

std::vector<Operand> parse_args(LineLexer& lx) {
  std::vector<Operand> args;
  lx.expect("(");
  if (!lx.accept(")")) {
    do {
      args.push_back(parse_operand(lx));
    } while (lx.accept(","));
    lx.expect(")");
  }
  return args;
}

// Statement body after "LABEL:". Field accesses keep the raw receiver token
// in `receiver` and the bare field name in `field`; resolve_field_access fixes them.
Statement parse_form(LineLexer& lx) {
  Statement s;
  s.line = lx.line();
  const Token first = lx.peek();
  if (first.kind == Tok::Ident && first.text == "if") {
    lx.next();
    s.kind = StmtKind::IfGoto;
    s.a = parse_operand(lx);
    Token op = lx.next();
    // `a >= b` / `a > b` are accepted in conditions and stored swapped.
    const bool swapped = op.text == ">=" || op.text == ">";
    if (swapped) op.text = op.text == ">=" ? "<=" : "<";
    auto bop = binop_of(op);
    if (!bop || !is_comparison(*bop)) lx.error("expected comparison", op.col);
    s.binop = *bop;
    s.b = parse_operand(lx);
    if (swapped) std::swap(s.a, s.b);
    if (lx.peek().text != "goto") lx.error("expected 'goto'", lx.peek().col);
    lx.next();
    s.target = lx.label();
  } else if (first.kind == Tok::Ident && first.text == "goto") {
    lx.next();
    s.kind = StmtKind::Goto;
    s.target = lx.label();
  } else if (first.kind == Tok::Ident && first.text == "return") {
    lx.next();
    s.kind = StmtKind::Return;
    if (!lx.at_end()) {
      s.has_value = true;
      s.a = parse_operand(lx);
    }
  } else if (first.kind == Tok::Ident && first.text == "call") {
    lx.next();
    s.kind = StmtKind::Call;
    s.callee = lx.ident("function name");
    s.args = parse_args(lx);
  } else {
    const std::string lhs = lx.ident("statement");
    if (lx.accept(".")) {
      s.kind = StmtKind::FieldWrite;
      s.receiver = lhs;
      s.field = lx.ident("field name");
      lx.expect("=");
      s.a = parse_operand(lx);
    } else if (lx.accept("[")) {
      s.kind = StmtKind::ArrayWrite;
      s.array = lhs;
      s.a = parse_operand(lx);
      lx.expect("]");
      lx.expect("=");
      s.b = parse_operand(lx);
    } else {
      lx.expect("=");
      s.dst = lhs;
      const Token t = lx.peek();
      if (t.kind == Tok::Ident && t.text == "const") {
        lx.next();
        const Token n = lx.next();
        if (n.kind != Tok::Number) lx.error("expected constant", n.col);
        s.kind = StmtKind::AssignConst;
        s.a = Operand::lit(parse_number(n, lx.line()));
      } else if (t.kind == Tok::Ident && t.text == "call") {
        lx.next();
        s.kind = StmtKind::Call;
        s.callee = lx.ident("function name");
        s.args = parse_args(lx);
      } else if (t.kind == Tok::Ident && t.text == "newarray") {
        lx.next();
        s.kind = StmtKind::ArrayNew;
        s.a = parse_operand(lx);
      } else if (auto u = unop_of(t)) {
        lx.next();
        s.kind = StmtKind::AssignUnop;
        s.unop = *u;
        s.a = parse_operand(lx);
      } else if (t.kind == Tok::Ident && lx.peek(1).text == "." &&
                 lx.peek(1).kind == Tok::Punct) {
        s.kind = StmtKind::FieldRead;
        s.receiver = lx.ident("receiver");
        lx.expect(".");
        s.field = lx.ident("field name");
      } else if (t.kind == Tok::Ident && lx.peek(1).text == "[" &&
                 lx.peek(1).kind == Tok::Punct) {
        s.kind = StmtKind::ArrayRead;
        s.array = lx.ident("array");
        lx.expect("[");
        s.a = parse_operand(lx);
        lx.expect("]");
      } else {
        s.a = parse_operand(lx);
        if (lx.at_end()) {
          if (s.a.is_var()) {
            s.kind = StmtKind::AssignUnop;
            s.unop = UnOp::Copy;
          } else {
            s.kind = StmtKind::AssignConst;
          }
        } else {
          const Token op = lx.next();
          auto bop = binop_of(op);
          if (!bop) lx.error("expected binary operator", op.col);
          s.kind = StmtKind::AssignBinop;
          s.binop = *bop;
          s.b = parse_operand(lx);
        }
      }
    }
  }
  if (!lx.at_end()) lx.error("unexpected trailing tokens", lx.peek().col);
  return s;
}

struct RawFunction {
  Function fn;
  int line = 0;
};

[[noreturn]] void fail_at(ErrorKind kind, int line, const std::string& msg) {
  throw ParseError(kind, line, 1, msg);
}

void validate_function(Program& p, Function& f, int header_line) {
  std::set<Label> labels;
  for (const auto& s : f.body)
    if (!labels.insert(s.label).second)
      fail_at(ErrorKind::DuplicateLabel, s.line,
              "duplicate label '" + s.label + "' in " + f.id);
  for (auto& s : f.body) {
    if ((s.kind == StmtKind::IfGoto || s.kind == StmtKind::Goto) &&
        !labels.count(s.target))
      fail_at(ErrorKind::UnresolvedLabel, s.line,
              "unresolved label '" + s.target + "' in " + f.id);
    if (s.kind == StmtKind::Call) {
      if (const Function* callee = p.function(s.callee)) {
        if (callee->params.size() != s.args.size())
          fail_at(ErrorKind::UnresolvedCall, s.line,
                  "call to " + s.callee + " with wrong arity");
      } else if (auto it = p.externs.find(s.callee); it != p.externs.end()) {
        if (static_cast<std::size_t>(it->second) != s.args.size())
          fail_at(ErrorKind::UnresolvedCall, s.line,
                  "call to extern " + s.callee + " with wrong arity");
      } else {
        fail_at(ErrorKind::UnresolvedCall, s.line,
                "unresolved call target '" + s.callee + "'");
      }
    }
    try {
      resolve_field_access(p.fields, s);
    } catch (const Error& e) {
      fail_at(e.kind(), s.line, e.detail());
    }
  }
  f.locals.clear();
  f.locals.insert(f.params.begin(), f.params.end());
  for (const auto& s : f.body)
    for (const auto& d : def_use(s).defs)
      if (!d.is_field()) f.locals.insert(d.name);
  for (const auto& s : f.body)
    for (const auto& u : def_use(s).uses)
      if (!u.is_field() && !f.locals.count(u.name))
        fail_at(ErrorKind::UndeclaredVariable, s.line,
                "undeclared variable '" + u.name + "' in " + f.id);
  if (f.body.empty())
    fail_at(ErrorKind::Syntax, header_line, "function " + f.id + " has no body");

  // Reachability from the first statement.
  std::vector<bool> seen(f.body.size(), false);
  std::deque<std::size_t> work{0};
  seen[0] = true;
  auto push = [&](std::size_t i) {
    if (i < f.body.size() && !seen[i]) {
      seen[i] = true;
      work.push_back(i);
    }
  };
  while (!work.empty()) {
    const std::size_t i = work.front();
    work.pop_front();
    const auto& s = f.body[i];
    switch (s.kind) {
      case StmtKind::Goto: push(*f.find(s.target)); break;
      case StmtKind::IfGoto:
        push(*f.find(s.target));
        push(i + 1);
        break;
      case StmtKind::Return: break;
      default: push(i + 1); break;
    }
  }
  for (std::size_t i = 0; i < f.body.size(); ++i)
    if (!seen[i])
      fail_at(ErrorKind::UnreachableStatement, f.body[i].line,
              "unreachable statement '" + f.body[i].label + "' in " + f.id);
}

}  // namespace

void resolve_field_access(const std::vector<FieldId>& fields, Statement& s) {
  if (s.kind != StmtKind::FieldRead && s.kind != StmtKind::FieldWrite) return;
  if (s.field.find('.') != std::string::npos) return;  // already resolved
  const std::string recv = s.receiver;
  const std::string name = s.field;
  const std::string qualified = recv + "." + name;
  if (std::find(fields.begin(), fields.end(), qualified) != fields.end()) {
    s.field = qualified;
    s.receiver.clear();
    return;
  }
  std::vector<FieldId> matches;
  for (const auto& f : fields) {
    auto dot = f.rfind('.');
    if (f.substr(dot + 1) == name) matches.push_back(f);
  }
  if (matches.size() != 1)
    fail(ErrorKind::UnresolvedField,
         matches.empty() ? "undeclared field '" + qualified + "'"
                         : "ambiguous field '" + name + "' via receiver '" +
                               recv + "'");
  s.field = matches.front();
}

Statement parse_statement_form(std::string_view text, int line) {
  LineLexer lx(text, line);
  return parse_form(lx);
}

Program parse_mir(std::string_view text) {
  Program p;
  std::vector<RawFunction> raw;
  std::string entry;
  int entry_line = 0;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    LineLexer lx(line, line_no);
    if (lx.at_end()) {
      if (nl == text.size()) break;
      continue;
    }
    const Token first = lx.peek();
    if (first.kind == Tok::Ident && first.text == "extern") {
      lx.next();
      const std::string name = lx.ident("extern name");
      lx.expect("/");
      const Token n = lx.next();
      if (n.kind != Tok::Number) lx.error("expected arity", n.col);
      const Scalar arity = parse_number(n, line_no);
      if (!std::holds_alternative<std::int64_t>(arity) || std::get<std::int64_t>(arity) < 0)
        lx.error("bad arity", n.col);
      if (!p.externs.emplace(name, static_cast<int>(std::get<std::int64_t>(arity))).second)
        lx.error("duplicate extern '" + name + "'", first.col);
    } else if (first.kind == Tok::Ident && first.text == "field") {
      lx.next();
      const std::string cls = lx.ident("class name");
      lx.expect(".");
      const std::string name = lx.ident("field name");
      p.fields.push_back(cls + "." + name);
    } else if (first.kind == Tok::Ident && first.text == "entry") {
      lx.next();
      entry = lx.ident("function name");
      entry_line = line_no;
    } else if ((first.kind == Tok::Ident && first.text == "func") ||
               (first.kind == Tok::Ident && lx.peek(1).text == "(")) {
      if (first.text == "func") lx.next();
      RawFunction rf;
      rf.line = line_no;
      rf.fn.id = lx.ident("function name");
      lx.expect("(");
      if (!lx.accept(")")) {
        do {
          rf.fn.params.push_back(lx.ident("parameter"));
        } while (lx.accept(","));
        lx.expect(")");
      }
      lx.expect(":");
      raw.push_back(std::move(rf));
      if (!lx.at_end()) {
        const std::string label = lx.label();
        lx.expect(":");
        Statement s = parse_form(lx);
        s.label = label;
        raw.back().fn.body.push_back(std::move(s));
      }
    } else {
      if (raw.empty()) lx.error("statement outside of a function", first.col);
      const std::string label = lx.label();
      lx.expect(":");
      if (lx.at_end()) lx.error("empty statement", lx.peek().col);
      Statement s = parse_form(lx);
      s.label = label;
      raw.back().fn.body.push_back(std::move(s));
    }
    if (nl == text.size()) break;
  }

  std::set<std::string> names;
  for (auto& rf : raw) {
    if (!names.insert(rf.fn.id).second || p.externs.count(rf.fn.id))
      fail_at(ErrorKind::Syntax, rf.line, "duplicate function '" + rf.fn.id + "'");
    p.functions.push_back(rf.fn);
  }
  for (std::size_t i = 0; i < p.functions.size(); ++i)
    validate_function(p, p.functions[i], raw[i].line);

  if (!entry.empty()) {
    if (!p.function(entry))
      fail_at(ErrorKind::UnresolvedCall, entry_line, "unknown entry '" + entry + "'");
    p.entry = entry;
  } else if (p.function("main")) {
    p.entry = "main";
  } else if (!p.functions.empty()) {
    p.entry = p.functions.front().id;
  }
  return p;
}

namespace {

std::string operand_text(const Operand& op) {
  return op.is_var() ? op.name() : format_scalar(op.literal());
}

std::string field_access(const Statement& s) {
  if (s.receiver.empty()) return s.field;
  return s.receiver + "." + s.field.substr(s.field.rfind('.') + 1);
}

std::string call_text(const Statement& s) {
  std::string out = "call " + s.callee + "(";
  for (std::size_t i = 0; i < s.args.size(); ++i) {
    if (i) out += ", ";
    out += operand_text(s.args[i]);
  }
  return out + ")";
}

}  // namespace

std::string format_operand(const Operand& op) { return operand_text(op); }

std::string print_statement(const Statement& s) {
  std::string body;
  switch (s.kind) {
    case StmtKind::AssignConst:
      body = s.dst + " = const " + operand_text(s.a);
      break;
    case StmtKind::AssignBinop:
      body = s.dst + " = " + operand_text(s.a) + " " +
             std::string(to_string(s.binop)) + " " + operand_text(s.b);
      break;
    case StmtKind::AssignUnop:
      body = s.unop == UnOp::Copy
                 ? s.dst + " = " + operand_text(s.a)
                 : s.dst + " = " + std::string(to_string(s.unop)) + " " +
                       operand_text(s.a);
      break;
    case StmtKind::Call:
      body = s.dst.empty() ? call_text(s) : s.dst + " = " + call_text(s);
      break;
    case StmtKind::FieldRead:
      body = s.dst + " = " + field_access(s);
      break;
    case StmtKind::FieldWrite:
      body = field_access(s) + " = " + operand_text(s.a);
      break;
    case StmtKind::ArrayRead:
      body = s.dst + " = " + s.array + "[" + operand_text(s.a) + "]";
      break;
    case StmtKind::ArrayWrite:
      body = s.array + "[" + operand_text(s.a) + "] = " + operand_text(s.b);
      break;
    case StmtKind::ArrayNew:
      body = s.dst + " = newarray " + operand_text(s.a);
      break;
    case StmtKind::IfGoto:
      body = "if " + operand_text(s.a) + " " + std::string(to_string(s.binop)) +
             " " + operand_text(s.b) + " goto " + s.target;
      break;
    case StmtKind::Goto:
      body = "goto " + s.target;
      break;
    case StmtKind::Return:
      body = s.has_value ? "return " + operand_text(s.a) : "return";
      break;
  }
  return s.label + ": " + body;
}

std::string print_mir(const Program& p) {
  std::ostringstream out;
  for (const auto& [name, arity] : p.externs)
    out << "extern " << name << "/" << arity << "\n";
  for (const auto& f : p.fields) out << "field " << f << "\n";
  if (!p.entry.empty()) out << "entry " << p.entry << "\n";
  for (const auto& f : p.functions) {
    out << "func " << f.id << "(";
    for (std::size_t i = 0; i < f.params.size(); ++i)
      out << (i ? ", " : "") << f.params[i];
    out << "):\n";
    for (const auto& s : f.body) out << "  " << print_statement(s) << "\n";
  }
  return out.str();
}

}  // namespace recon::mir
