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

#include "recon/error.hpp"

namespace recon {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::UnresolvedLabel: return "UnresolvedLabel";
    case ErrorKind::UnresolvedCall: return "UnresolvedCall";
    case ErrorKind::UnresolvedField: return "UnresolvedField";
    case ErrorKind::DuplicateLabel: return "DuplicateLabel";
    case ErrorKind::UnreachableStatement: return "UnreachableStatement";
    case ErrorKind::UndeclaredVariable: return "UndeclaredVariable";
    case ErrorKind::MalformedFile: return "MalformedFile";
    case ErrorKind::DanglingTensor: return "DanglingTensor";
    case ErrorKind::MissingQuantParams: return "MissingQuantParams";
    case ErrorKind::UnknownLayout: return "UnknownLayout";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::NoCriterionFound: return "NoCriterionFound";
    case ErrorKind::UnsatisfiableOrder: return "UnsatisfiableOrder";
    case ErrorKind::MultipleHeads: return "MultipleHeads";
    case ErrorKind::IrreducibleControlFlow: return "IrreducibleControlFlow";
    case ErrorKind::UnsupportedLoop: return "UnsupportedLoop";
    case ErrorKind::CycleDetected: return "CycleDetected";
    case ErrorKind::UnknownOpcode: return "UnknownOpcode";
    case ErrorKind::InconsistentShapes: return "InconsistentShapes";
    case ErrorKind::NonIntegerMultiplier: return "NonIntegerMultiplier";
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::OutOfBoundsArrayAccess: return "OutOfBoundsArrayAccess";
    case ErrorKind::UnboundInput: return "UnboundInput";
    case ErrorKind::UnboundVariable: return "UnboundVariable";
    case ErrorKind::UnboundExtern: return "UnboundExtern";
    case ErrorKind::FieldReadBeforeWrite: return "FieldReadBeforeWrite";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::UnsupportedOp: return "UnsupportedOp";
    case ErrorKind::NoForwardPass: return "NoForwardPass";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::EmptyDetections: return "EmptyDetections";
    case ErrorKind::ImageTooSmall: return "ImageTooSmall";
    case ErrorKind::StepLimitExceeded: return "StepLimitExceeded";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax:
    case ErrorKind::UnresolvedLabel:
    case ErrorKind::UnresolvedCall:
    case ErrorKind::UnresolvedField:
    case ErrorKind::DuplicateLabel:
    case ErrorKind::UnreachableStatement:
    case ErrorKind::UndeclaredVariable:
    case ErrorKind::MalformedFile:
    case ErrorKind::DanglingTensor:
    case ErrorKind::MissingQuantParams:
    case ErrorKind::UnknownLayout:
    case ErrorKind::InvalidConfig:
    case ErrorKind::Io:
      return 1;
    case ErrorKind::NoCriterionFound:
    case ErrorKind::UnsatisfiableOrder:
    case ErrorKind::MultipleHeads:
    case ErrorKind::IrreducibleControlFlow:
    case ErrorKind::UnsupportedLoop:
      return 2;
    case ErrorKind::CycleDetected:
    case ErrorKind::UnknownOpcode:
    case ErrorKind::InconsistentShapes:
    case ErrorKind::NonIntegerMultiplier:
      return 3;
    default:
      return 4;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      detail_(message) {}

ParseError::ParseError(ErrorKind kind, int line, int column,
                       const std::string& message)
    : Error(kind, std::to_string(line) + ":" + std::to_string(column) + ": " +
                      message),
      line_(line),
      column_(column) {}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace recon
