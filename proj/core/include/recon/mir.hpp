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

// Three-address mini-IR ("MIR"): the program representation that slicing and
// code re-synthesis operate on.
//
// Grammar (line oriented, `#` starts a comment):
//   extern NAME/ARITY
//   field CLASS.F
//   entry NAME
//   func NAME(p1, p2, ...):
//   LABEL: x = const K | x = y | x = y OP z | x = UOP y | x = call f(a, ...)
//        | call f(a, ...) | x = R.F | R.F = x | x = arr[i] | arr[i] = x
//        | arr = newarray N | if x OP y goto LABEL | goto LABEL
//        | return [x]

#ifndef RECON_MIR_HPP_
#define RECON_MIR_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace recon::mir {

using FunctionId = std::string;
using VarId = std::string;
using FieldId = std::string;  // "CLASS.F"
using Label = std::string;

using Scalar = std::variant<std::int64_t, double>;

enum class BinOp { Add, Sub, Mul, Div, Rem, Lt, Le, Eq, Ne, Shr, Shl };
enum class UnOp { Neg, Not, Int2Float, Float2Int, Copy };

enum class StmtKind {
  AssignConst,
  AssignBinop,
  AssignUnop,
  Call,
  FieldRead,
  FieldWrite,
  ArrayRead,
  ArrayWrite,
  ArrayNew,
  IfGoto,
  Goto,
  Return,
};

std::string_view to_string(BinOp op);
std::string_view to_string(UnOp op);
bool is_comparison(BinOp op);

/// A variable reference or a numeric literal.
class Operand {
 public:
  Operand() : v_(Scalar{std::int64_t{0}}) {}
  static Operand var(VarId name) { return Operand(std::move(name)); }
  static Operand lit(Scalar value) { return Operand(value); }

  bool is_var() const { return std::holds_alternative<VarId>(v_); }
  const VarId& name() const { return std::get<VarId>(v_); }
  const Scalar& literal() const { return std::get<Scalar>(v_); }

  friend bool operator==(const Operand&, const Operand&) = default;

 private:
  explicit Operand(VarId n) : v_(std::move(n)) {}
  explicit Operand(Scalar s) : v_(s) {}
  std::variant<VarId, Scalar> v_;
};

// Field usage per kind:
//   AssignConst  dst = a
//   AssignBinop  dst = a binop b
//   AssignUnop   dst = unop a
//   Call         [dst =] callee(args)        dst empty when no result
//   FieldRead    dst = receiver.field
//   FieldWrite   receiver.field = a
//   ArrayRead    dst = array[a]
//   ArrayWrite   array[a] = b
//   ArrayNew     dst = newarray a
//   IfGoto       if a binop b goto target
//   Goto         goto target
//   Return       return [a]              has_value tells
struct Statement {
  Label label;
  StmtKind kind = StmtKind::Return;
  VarId dst;
  Operand a;
  Operand b;
  BinOp binop = BinOp::Add;
  UnOp unop = UnOp::Copy;
  std::string callee;
  std::vector<Operand> args;
  FieldId field;
  // Variable receiver of a field access; empty for static `CLASS.F` access.
  VarId receiver;
  VarId array;
  Label target;
  bool has_value = false;
  int line = 0;

  friend bool operator==(const Statement& x, const Statement& y) {
    return x.label == y.label && x.kind == y.kind && x.dst == y.dst &&
           x.a == y.a && x.b == y.b && x.binop == y.binop &&
           x.unop == y.unop && x.callee == y.callee && x.args == y.args &&
           x.field == y.field && x.receiver == y.receiver &&
           x.array == y.array && x.target == y.target &&
           x.has_value == y.has_value;
  }
};

struct Function {
  FunctionId id;
  std::vector<VarId> params;
  std::vector<Statement> body;
  std::set<VarId> locals;

  /// Index of the statement carrying `label`, if any.
  std::optional<std::size_t> find(std::string_view label) const;
};

struct Program {
  std::vector<Function> functions;
  std::vector<FieldId> fields;
  std::map<std::string, int> externs;  // name -> arity
  FunctionId entry;

  const Function* function(std::string_view id) const;
  std::optional<std::size_t> function_index(std::string_view id) const;
  bool is_extern(std::string_view name) const;
};

/// A def/use element: either a local variable or a field.
struct ValueRef {
  enum class Kind { Var, Field };
  Kind kind = Kind::Var;
  std::string name;

  static ValueRef var(std::string n) { return {Kind::Var, std::move(n)}; }
  static ValueRef field(std::string n) { return {Kind::Field, std::move(n)}; }
  bool is_field() const { return kind == Kind::Field; }

  friend auto operator<=>(const ValueRef&, const ValueRef&) = default;
};

using ValueSet = std::set<ValueRef>;

struct DefUse {
  ValueSet defs;
  ValueSet uses;
};

/// Values written and read by one statement. Arrays are a single abstract
/// cell, so an element write both defines and uses the array.
DefUse def_use(const Statement& stmt);

/// Parses and validates MIR text. Throws ParseError.
Program parse_mir(std::string_view text);

/// Prints a program in the grammar accepted by parse_mir.
std::string print_mir(const Program& program);
std::string print_statement(const Statement& stmt);

std::string format_scalar(const Scalar& value);
std::string format_operand(const Operand& op);
std::string format_value_set(const ValueSet& values);

/// Resolves a parsed field access (raw receiver token in `receiver`, bare
/// name in `field`) against declared fields. A receiver naming a declared
/// class is a static access; any other receiver is a variable and the field
/// is looked up by name, which must then be unambiguous.
void resolve_field_access(const std::vector<FieldId>& fields, Statement& stmt);

/// Parses one statement body (the text after `LABEL:`). Used by the
/// processing-program reader, which shares the statement forms.
Statement parse_statement_form(std::string_view text, int line);

}  // namespace recon::mir

#endif  // RECON_MIR_HPP_
