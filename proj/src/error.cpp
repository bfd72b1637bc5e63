// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#include "portir/error.hpp"

namespace portir {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::VersionError: return "VersionError";
    case ErrorCode::InvalidGraph: return "InvalidGraph";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::UnresolvableReshape: return "UnresolvableReshape";
    case ErrorCode::UnsupportedEquation: return "UnsupportedEquation";
    case ErrorCode::BadAttribute: return "BadAttribute";
    case ErrorCode::StaticShapeRequired: return "StaticShapeRequired";
    case ErrorCode::UnsupportedBackendOp: return "UnsupportedBackendOp";
    case ErrorCode::FeedMismatch: return "FeedMismatch";
    case ErrorCode::NumericError: return "NumericError";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::WrongOpKind: return "WrongOpKind";
    case ErrorCode::WrongDtype: return "WrongDtype";
    case ErrorCode::SignUnsafe: return "SignUnsafe";
    case ErrorCode::PatternMismatch: return "PatternMismatch";
    case ErrorCode::UnsupportedPadding: return "UnsupportedPadding";
    case ErrorCode::BadRank: return "BadRank";
    case ErrorCode::UnboundSymbol: return "UnboundSymbol";
    case ErrorCode::ConflictingBinding: return "ConflictingBinding";
    case ErrorCode::SignatureMismatch: return "SignatureMismatch";
    case ErrorCode::IncompatibleGraph: return "IncompatibleGraph";
    case ErrorCode::UnsupportedMode: return "UnsupportedMode";
    case ErrorCode::EmptyCalibrationSet: return "EmptyCalibrationSet";
    case ErrorCode::MissingParams: return "MissingParams";
    case ErrorCode::ModelLoadFailed: return "ModelLoadFailed";
    case ErrorCode::ShapeUnresolved: return "ShapeUnresolved";
    case ErrorCode::OutOfOrder: return "OutOfOrder";
    case ErrorCode::BaselineCorrupted: return "BaselineCorrupted";
    case ErrorCode::CorruptKnowledgeBase: return "CorruptKnowledgeBase";
    case ErrorCode::ProjectLocked: return "ProjectLocked";
    case ErrorCode::DirNotEmpty: return "DirNotEmpty";
    case ErrorCode::BadFlag: return "BadFlag";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace portir
