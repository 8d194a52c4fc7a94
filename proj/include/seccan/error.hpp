// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace seccan {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidFrame,
  kConfig,
  kIo,
  kSchema,
  kEmptyTrace,
  kDegenerateSplit,
  kDegenerateData,
  kNonFinite,
  kZeroVariance,
  kVersionMismatch,
  kChecksumMismatch,
  kDimensionMismatch,
  kLengthMismatch,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace seccan
