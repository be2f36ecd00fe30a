// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/error.hpp"

namespace mmp {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
  case Errc::kEmptyInput: return "EmptyInput";
  case Errc::kInvalidCharacter: return "InvalidCharacter";
  case Errc::kUnbalancedParentheses: return "UnbalancedParentheses";
  case Errc::kDanglingRingBond: return "DanglingRingBond";
  case Errc::kUnknownElement: return "UnknownElement";
  case Errc::kUnterminatedBracketAtom: return "UnterminatedBracketAtom";
  case Errc::kDisconnected: return "Disconnected";
  case Errc::kStarDegreeError: return "StarDegreeError";
  case Errc::kStarCountError: return "StarCountError";
  case Errc::kAdjacentStarsError: return "AdjacentStarsError";
  case Errc::kEmptyBody: return "EmptyBody";
  case Errc::kMalformedRecord: return "MalformedRecord";
  case Errc::kInvariantViolation: return "InvariantViolation";
  case Errc::kUnknownAtomType: return "UnknownAtomType";
  case Errc::kUnknownId: return "UnknownId";
  case Errc::kLengthExceeded: return "LengthExceeded";
  case Errc::kDataMisaligned: return "DataMisaligned";
  case Errc::kMissingConformer: return "MissingConformer";
  case Errc::kTooFewRecords: return "TooFewRecords";
  case Errc::kConstantTargets: return "ConstantTargets";
  case Errc::kIoError: return "IoError";
  case Errc::kVersionMismatch: return "VersionMismatch";
  case Errc::kCorruptPayload: return "CorruptPayload";
  case Errc::kConfigError: return "ConfigError";
  case Errc::kShapeMismatch: return "ShapeMismatch";
  case Errc::kOddDimension: return "OddDimension";
  case Errc::kZeroVector: return "ZeroVector";
  case Errc::kNumericFailure: return "NumericFailure";
  }
  return "Unknown";
}

ErrorClass error_class(Errc code) noexcept {
  switch (code) {
  case Errc::kConfigError:
    return ErrorClass::kUsage;
  case Errc::kNumericFailure:
  case Errc::kZeroVector:
    return ErrorClass::kNumeric;
  default:
    return ErrorClass::kData;
  }
}

}  // namespace mmp
