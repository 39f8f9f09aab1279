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

#ifndef RECON_INTERP_HPP_
#define RECON_INTERP_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "recon/mir.hpp"

namespace recon::interp {

using Array = std::vector<mir::Scalar>;
using Value = std::variant<std::int64_t, double, Array>;

/// Bitwise equality; NaNs with the same payload compare equal.
bool bit_equal(const Value& a, const Value& b);
std::string format_value(const Value& v);

using HostFn = std::function<std::optional<Value>(const std::vector<Value>&)>;

struct Environment {
  /// Values returned by zero-arity externs, and bound to entry parameters.
  std::map<std::string, Value> inputs;
  /// Externs implemented by the host (e.g. the model invocation).
  std::map<std::string, HostFn> host;
  std::size_t step_limit = 5'000'000;
  /// Reading a field before any write raises FieldReadBeforeWrite.
  bool strict_fields = true;
};

struct SinkEvent {
  std::string site;  // "func:label"
  std::string name;
  std::vector<Value> args;
};

struct RunResult {
  std::vector<SinkEvent> sinks;
  std::map<std::string, Value> fields;
  std::optional<Value> returned;
  std::size_t steps = 0;

  /// Arguments of the last call to sink `name`, if any.
  const std::vector<Value>* last(const std::string& name) const;
};

using Frame = std::unordered_map<mir::VarId, Value>;

/// Statement-level semantics shared by the CFG and structured interpreters.
class Machine {
 public:
  using CallFn = std::function<std::optional<Value>(const std::string& callee,
                                                    std::vector<Value> args)>;

  Machine(const mir::Program& program, Environment env);

  /// Executes a non-control statement in `frame`.
  void exec(const mir::Statement& s, Frame& frame, const std::string& func);
  bool condition(const mir::Statement& s, const Frame& frame) const;
  Value operand(const mir::Operand& op, const Frame& frame) const;
  void tick();

  const Environment& env() const { return env_; }
  CallFn call_internal;
  RunResult result;

 private:
  std::optional<Value> call_extern(const mir::Statement& s,
                                   std::vector<Value> args,
                                   const std::string& func);

  const mir::Program& program_;
  Environment env_;
};

/// Selects statements for sliced execution; nullptr runs everything.
using KeepFn = std::function<bool(std::size_t func, std::size_t index)>;
/// Called before each executed statement.
using Observer =
    std::function<void(std::size_t func, std::size_t index, const Frame& frame)>;

/// Runs the program's entry function directly on its CFG.
RunResult run(const mir::Program& program, const Environment& env,
              const KeepFn& keep = nullptr, const Observer& observer = nullptr);

Value binop(mir::BinOp op, const Value& a, const Value& b);
Value unop(mir::UnOp op, const Value& a);

}  // namespace recon::interp

#endif  // RECON_INTERP_HPP_
