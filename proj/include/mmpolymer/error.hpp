// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_ERROR_HPP_
#define MMPOLYMER_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmp {

enum class Errc {
  // P-SMILES grammar and rewriting
  kEmptyInput,
  kInvalidCharacter,
  kUnbalancedParentheses,
  kDanglingRingBond,
  kUnknownElement,
  kUnterminatedBracketAtom,
  kDisconnected,
  kStarDegreeError,
  kStarCountError,
  kAdjacentStarsError,
  kEmptyBody,
  // data ingestion
  kMalformedRecord,
  kInvariantViolation,
  kUnknownAtomType,
  kUnknownId,
  kLengthExceeded,
  kDataMisaligned,
  kMissingConformer,
  kTooFewRecords,
  kConstantTargets,
  kIoError,
  // persistence and configuration
  kVersionMismatch,
  kCorruptPayload,
  kConfigError,
  // numerics
  kShapeMismatch,
  kOddDimension,
  kZeroVector,
  kNumericFailure,
};

std::string_view errc_name(Errc code) noexcept;

// Broad class used by the command line to choose an exit status.
enum class ErrorClass { kUsage, kData, kNumeric };

ErrorClass error_class(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string &what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) { }

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mmp

#endif  // MMPOLYMER_ERROR_HPP_
