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

#include "recon/interp.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "recon/analysis.hpp"
#include "recon/error.hpp"

namespace recon::interp {

using mir::BinOp;
using mir::Scalar;
using mir::StmtKind;
using mir::UnOp;

namespace {

constexpr std::size_t kMaxDepth = 256;
constexpr std::int64_t kMaxArray = std::int64_t{1} << 24;

bool scalar_bits_equal(const Scalar& a, const Scalar& b) {
  if (a.index() != b.index()) return false;
  if (const auto* i = std::get_if<std::int64_t>(&a)) return *i == std::get<std::int64_t>(b);
  const double x = std::get<double>(a), y = std::get<double>(b);
  return std::memcmp(&x, &y, sizeof x) == 0;
}

Scalar to_scalar(const Value& v, const char* what) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) return *d;
  fail(ErrorKind::TypeMismatch, std::string(what) + ": expected a scalar, got an array");
}

Value from_scalar(const Scalar& s) {
  if (const auto* i = std::get_if<std::int64_t>(&s)) return *i;
  return std::get<double>(s);
}

double as_double(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  return std::get<double>(v);
}

std::int64_t as_int(const Value& v, const char* what) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  fail(ErrorKind::TypeMismatch, std::string(what) + ": expected an int");
}

std::int64_t wrap(std::uint64_t u) { return static_cast<std::int64_t>(u); }

std::int64_t saturate(double d) {
  if (std::isnan(d)) return 0;
  if (d >= 9223372036854775807.0) return std::numeric_limits<std::int64_t>::max();
  if (d <= -9223372036854775808.0) return std::numeric_limits<std::int64_t>::min();
  return static_cast<std::int64_t>(d);
}

}  // namespace

bool bit_equal(const Value& a, const Value& b) {
  if (a.index() != b.index()) return false;
  if (const auto* x = std::get_if<Array>(&a)) {
    const auto& y = std::get<Array>(b);
    if (x->size() != y.size()) return false;
    for (std::size_t i = 0; i < x->size(); ++i)
      if (!scalar_bits_equal((*x)[i], y[i])) return false;
    return true;
  }
  return scalar_bits_equal(to_scalar(a, "compare"), to_scalar(b, "compare"));
}

std::string format_value(const Value& v) {
  if (const auto* arr = std::get_if<Array>(&v)) {
    std::string out = "[";
    for (std::size_t i = 0; i < arr->size(); ++i) {
      if (i) out += ", ";
      out += mir::format_scalar((*arr)[i]);
    }
    return out + "]";
  }
  return mir::format_scalar(to_scalar(v, "format"));
}

const std::vector<Value>* RunResult::last(const std::string& name) const {
  for (auto it = sinks.rbegin(); it != sinks.rend(); ++it)
    if (it->name == name) return &it->args;
  return nullptr;
}

Value binop(BinOp op, const Value& a, const Value& b) {
  const Scalar x = to_scalar(a, "binary operand");
  const Scalar y = to_scalar(b, "binary operand");
  const bool ints = std::holds_alternative<std::int64_t>(x) &&
                    std::holds_alternative<std::int64_t>(y);
  if (op == BinOp::Shl || op == BinOp::Shr) {
    if (!ints) fail(ErrorKind::TypeMismatch, "shift needs int operands");
    const auto i = std::get<std::int64_t>(x);
    const int sh = static_cast<int>(std::get<std::int64_t>(y) & 63);
    if (op == BinOp::Shl) return wrap(static_cast<std::uint64_t>(i) << sh);
    return i >> sh;  // arithmetic shift
  }
  if (ints) {
    const auto i = std::get<std::int64_t>(x), j = std::get<std::int64_t>(y);
    const auto u = static_cast<std::uint64_t>(i), v = static_cast<std::uint64_t>(j);
    switch (op) {
      case BinOp::Add: return wrap(u + v);
      case BinOp::Sub: return wrap(u - v);
      case BinOp::Mul: return wrap(u * v);
      case BinOp::Div:
        if (j == 0) fail(ErrorKind::DivisionByZero, "integer division by zero");
        if (j == -1) return wrap(0 - u);
        return i / j;
      case BinOp::Rem:
        if (j == 0) fail(ErrorKind::DivisionByZero, "integer remainder by zero");
        if (j == -1) return std::int64_t{0};
        return i % j;
      case BinOp::Lt: return std::int64_t{i < j};
      case BinOp::Le: return std::int64_t{i <= j};
      case BinOp::Eq: return std::int64_t{i == j};
      case BinOp::Ne: return std::int64_t{i != j};
      default: break;
    }
  }
  const double p = as_double(from_scalar(x)), q = as_double(from_scalar(y));
  switch (op) {
    case BinOp::Add: return p + q;
    case BinOp::Sub: return p - q;
    case BinOp::Mul: return p * q;
    case BinOp::Div: return p / q;
    case BinOp::Rem: return std::fmod(p, q);
    case BinOp::Lt: return std::int64_t{p < q};
    case BinOp::Le: return std::int64_t{p <= q};
    case BinOp::Eq: return std::int64_t{p == q};
    case BinOp::Ne: return std::int64_t{p != q};
    default: break;
  }
  fail(ErrorKind::TypeMismatch, "unsupported binary operation");
}

Value unop(UnOp op, const Value& a) {
  if (op == UnOp::Copy) return a;
  const Scalar x = to_scalar(a, "unary operand");
  const auto* i = std::get_if<std::int64_t>(&x);
  switch (op) {
    case UnOp::Neg:
      if (i) return wrap(0 - static_cast<std::uint64_t>(*i));
      return -std::get<double>(x);
    case UnOp::Not:
      if (!i) fail(ErrorKind::TypeMismatch, "not needs an int");
      return std::int64_t{*i == 0};
    case UnOp::Int2Float:
      return i ? static_cast<double>(*i) : std::get<double>(x);
    case UnOp::Float2Int:
      return i ? *i : saturate(std::get<double>(x));
    case UnOp::Copy:
      break;
  }
  return a;
}

Machine::Machine(const mir::Program& program, Environment env)
    : program_(program), env_(std::move(env)) {}

void Machine::tick() {
  if (++result.steps > env_.step_limit)
    fail(ErrorKind::StepLimitExceeded,
         "step limit of " + std::to_string(env_.step_limit) + " exceeded");
}

Value Machine::operand(const mir::Operand& op, const Frame& frame) const {
  if (!op.is_var()) return from_scalar(op.literal());
  auto it = frame.find(op.name());
  if (it == frame.end())
    fail(ErrorKind::UnboundVariable, "variable '" + op.name() + "' read before assignment");
  return it->second;
}

bool Machine::condition(const mir::Statement& s, const Frame& frame) const {
  return std::get<std::int64_t>(binop(s.binop, operand(s.a, frame), operand(s.b, frame))) != 0;
}

namespace {

Array& array_of(Frame& frame, const std::string& name) {
  auto it = frame.find(name);
  if (it == frame.end())
    fail(ErrorKind::UnboundVariable, "array '" + name + "' read before assignment");
  auto* arr = std::get_if<Array>(&it->second);
  if (!arr) fail(ErrorKind::TypeMismatch, "'" + name + "' is not an array");
  return *arr;
}

std::size_t checked_index(const Array& arr, const Value& idx, const std::string& name) {
  const std::int64_t i = as_int(idx, "array index");
  if (i < 0 || static_cast<std::uint64_t>(i) >= arr.size())
    fail(ErrorKind::OutOfBoundsArrayAccess,
         "index " + std::to_string(i) + " out of bounds for '" + name + "' of size " +
             std::to_string(arr.size()));
  return static_cast<std::size_t>(i);
}

}  // namespace

void Machine::exec(const mir::Statement& s, Frame& frame, const std::string& func) {
  switch (s.kind) {
    case StmtKind::AssignConst:
      frame[s.dst] = from_scalar(s.a.literal());
      return;
    case StmtKind::AssignBinop:
      frame[s.dst] = binop(s.binop, operand(s.a, frame), operand(s.b, frame));
      return;
    case StmtKind::AssignUnop:
      frame[s.dst] = unop(s.unop, operand(s.a, frame));
      return;
    case StmtKind::FieldRead: {
      auto it = result.fields.find(s.field);
      if (it != result.fields.end()) {
        frame[s.dst] = it->second;
      } else if (env_.strict_fields) {
        fail(ErrorKind::FieldReadBeforeWrite, "field " + s.field + " read before any write");
      } else {
        frame[s.dst] = std::int64_t{0};
      }
      return;
    }
    case StmtKind::FieldWrite:
      result.fields[s.field] = operand(s.a, frame);
      return;
    case StmtKind::ArrayRead: {
      const Value idx = operand(s.a, frame);
      const Array& arr = array_of(frame, s.array);
      frame[s.dst] = from_scalar(arr[checked_index(arr, idx, s.array)]);
      return;
    }
    case StmtKind::ArrayWrite: {
      const Value idx = operand(s.a, frame);
      const Scalar v = to_scalar(operand(s.b, frame), "array element");
      Array& arr = array_of(frame, s.array);
      arr[checked_index(arr, idx, s.array)] = v;
      return;
    }
    case StmtKind::ArrayNew: {
      const std::int64_t n = as_int(operand(s.a, frame), "array size");
      if (n < 0 || n > kMaxArray)
        fail(ErrorKind::OutOfBoundsArrayAccess, "bad array size " + std::to_string(n));
      frame[s.dst] = Array(static_cast<std::size_t>(n), Scalar{std::int64_t{0}});
      return;
    }
    case StmtKind::Call: {
      std::vector<Value> args;
      args.reserve(s.args.size());
      for (const auto& a : s.args) args.push_back(operand(a, frame));
      std::optional<Value> r;
      if (program_.function(s.callee)) {
        if (!call_internal) fail(ErrorKind::UnboundExtern, "no internal call handler");
        r = call_internal(s.callee, std::move(args));
      } else {
        r = call_extern(s, std::move(args), func);
      }
      if (!s.dst.empty()) {
        if (r)
          frame[s.dst] = std::move(*r);
        else
          frame.erase(s.dst);
      }
      return;
    }
    default:
      fail(ErrorKind::TypeMismatch, "control statement passed to exec");
  }
}

std::optional<Value> Machine::call_extern(const mir::Statement& s,
                                          std::vector<Value> args,
                                          const std::string& func) {
  const std::string& name = s.callee;
  if (auto h = env_.host.find(name); h != env_.host.end()) return h->second(args);
  if (args.size() == 1) {
    if (name == "len") {
      const auto* arr = std::get_if<Array>(&args[0]);
      if (!arr) fail(ErrorKind::TypeMismatch, "len needs an array");
      return static_cast<std::int64_t>(arr->size());
    }
    if (name == "floor") {
      if (std::holds_alternative<std::int64_t>(args[0])) return args[0];
      return saturate(std::floor(as_double(args[0])));
    }
    if (name == "sqrt") return std::sqrt(as_double(args[0]));
    if (name == "exp") return std::exp(as_double(args[0]));
  }
  if (args.empty() && !s.dst.empty()) {
    auto it = env_.inputs.find(name);
    if (it == env_.inputs.end()) fail(ErrorKind::UnboundInput, "no input bound for '" + name + "'");
    return it->second;
  }
  if (s.dst.empty()) {
    result.sinks.push_back({func + ":" + s.label, name, std::move(args)});
    return std::nullopt;
  }
  fail(ErrorKind::UnboundExtern, "extern '" + name + "' has no binding");
}

namespace {

class CfgRunner {
 public:
  CfgRunner(const mir::Program& p, const Environment& env, const KeepFn& keep,
            const Observer& observer)
      : p_(p), m_(p, env), keep_(keep), observer_(observer) {
    for (const auto& f : p.functions) cfgs_.push_back(mir::build_cfg(f));
    ipdom_.resize(p.functions.size());
    m_.call_internal = [this](const std::string& callee, std::vector<Value> args) {
      return invoke(*p_.function_index(callee), std::move(args));
    };
  }

  RunResult run() {
    auto entry = p_.function_index(p_.entry);
    if (!entry) fail(ErrorKind::UnresolvedCall, "entry function '" + p_.entry + "' missing");
    const auto& f = p_.functions[*entry];
    std::vector<Value> args;
    for (const auto& param : f.params) {
      auto it = m_.env().inputs.find(param);
      if (it == m_.env().inputs.end())
        fail(ErrorKind::UnboundInput, "entry parameter '" + param + "' not bound");
      args.push_back(it->second);
    }
    m_.result.returned = invoke(*entry, std::move(args));
    return std::move(m_.result);
  }

 private:
  bool kept(std::size_t f, std::size_t i) const { return !keep_ || keep_(f, i); }

  std::size_t ipdom(std::size_t f, std::size_t i) {
    if (ipdom_[f].empty()) ipdom_[f] = mir::immediate_postdominators(cfgs_[f]);
    return ipdom_[f][i];
  }

  std::optional<Value> invoke(std::size_t fi, std::vector<Value> args) {
    if (++depth_ > kMaxDepth) fail(ErrorKind::StepLimitExceeded, "call depth limit exceeded");
    const auto& f = p_.functions[fi];
    Frame frame;
    for (std::size_t k = 0; k < f.params.size(); ++k) frame[f.params[k]] = std::move(args[k]);
    std::size_t pc = 0;
    std::optional<Value> ret;
    while (pc < f.body.size()) {
      const auto& s = f.body[pc];
      m_.tick();
      if (observer_) observer_(fi, pc, frame);
      const bool k = kept(fi, pc);
      if (s.kind == StmtKind::IfGoto) {
        if (k) {
          pc = m_.condition(s, frame) ? *f.find(s.target) : pc + 1;
        } else {
          pc = ipdom(fi, pc);  // == body size for the virtual exit
        }
      } else if (s.kind == StmtKind::Goto) {
        pc = *f.find(s.target);
      } else if (s.kind == StmtKind::Return) {
        if (k && s.has_value) ret = m_.operand(s.a, frame);
        break;
      } else {
        if (k) m_.exec(s, frame, f.id);
        ++pc;
      }
    }
    --depth_;
    return ret;
  }

  const mir::Program& p_;
  Machine m_;
  const KeepFn& keep_;
  const Observer& observer_;
  std::vector<mir::Cfg> cfgs_;
  std::vector<std::vector<std::size_t>> ipdom_;
  std::size_t depth_ = 0;
};

}  // namespace

RunResult run(const mir::Program& program, const Environment& env, const KeepFn& keep,
              const Observer& observer) {
  return CfgRunner(program, env, keep, observer).run();
}

}  // namespace recon::interp
