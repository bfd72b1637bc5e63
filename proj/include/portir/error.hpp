// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace portir {

/// Machine-matchable failure classes raised across the toolchain.
enum class ErrorCode {
  ParseError,
  VersionError,
  InvalidGraph,
  ShapeMismatch,
  TypeMismatch,
  UnresolvableReshape,
  UnsupportedEquation,
  BadAttribute,
  StaticShapeRequired,
  UnsupportedBackendOp,
  FeedMismatch,
  NumericError,
  InvalidProfile,
  WrongOpKind,
  WrongDtype,
  SignUnsafe,
  PatternMismatch,
  UnsupportedPadding,
  BadRank,
  UnboundSymbol,
  ConflictingBinding,
  SignatureMismatch,
  IncompatibleGraph,
  UnsupportedMode,
  EmptyCalibrationSet,
  MissingParams,
  ModelLoadFailed,
  ShapeUnresolved,
  OutOfOrder,
  BaselineCorrupted,
  CorruptKnowledgeBase,
  ProjectLocked,
  DirNotEmpty,
  BadFlag,
  IoError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace portir
