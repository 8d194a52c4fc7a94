// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "seccan/error.hpp"

namespace seccan {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidFrame: return "InvalidFrame";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kSchema: return "SchemaError";
    case ErrorCode::kEmptyTrace: return "EmptyTrace";
    case ErrorCode::kDegenerateSplit: return "DegenerateSplit";
    case ErrorCode::kDegenerateData: return "DegenerateData";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
  }
  return "Unknown";
}

}  // namespace seccan
