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

#ifndef RECON_ERROR_HPP_
#define RECON_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace recon {

enum class ErrorKind {
  // Input format problems (exit code 1).
  Syntax,
  UnresolvedLabel,
  UnresolvedCall,
  UnresolvedField,
  DuplicateLabel,
  UnreachableStatement,
  UndeclaredVariable,
  MalformedFile,
  DanglingTensor,
  MissingQuantParams,
  UnknownLayout,
  InvalidConfig,
  // Analysis failures (exit code 2).
  NoCriterionFound,
  UnsatisfiableOrder,
  MultipleHeads,
  IrreducibleControlFlow,
  UnsupportedLoop,
  // Model rebuild failures (exit code 3).
  CycleDetected,
  UnknownOpcode,
  InconsistentShapes,
  NonIntegerMultiplier,
  // Runtime and attack failures (exit code 4).
  DivisionByZero,
  OutOfBoundsArrayAccess,
  UnboundInput,
  UnboundVariable,
  UnboundExtern,
  FieldReadBeforeWrite,
  TypeMismatch,
  ShapeMismatch,
  UnsupportedOp,
  NoForwardPass,
  EmptyDataset,
  EmptyDetections,
  ImageTooSmall,
  StepLimitExceeded,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Process exit code associated with an error category.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

/// Parse error carrying a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(ErrorKind kind, int line, int column, const std::string& message);

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace recon

#endif  // RECON_ERROR_HPP_
