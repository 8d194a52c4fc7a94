// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seccan/qnn.hpp"

namespace seccan::qnn {

constexpr std::uint16_t kWeightFormatVersion = 1;

/// Binary weight file, all integers little-endian:
///   "SCQW" | u16 version | u8 layer count |
///   per layer: u16 in, u16 out, f64 weight scale, f64 activation scale,
///              i32 bias[out], weights packed two per byte (row-major,
///              low nibble first, two's complement) |
///   u32 CRC-32 of every preceding byte.
std::vector<std::uint8_t> serialize_layers(std::span<const QuantLayer> layers);
std::vector<std::uint8_t> export_weights(const QuantizedMlp& model);

/// Throws Error(kChecksumMismatch), Error(kVersionMismatch) or
/// Error(kDimensionMismatch).
QuantizedMlp import_weights(std::span<const std::uint8_t> bytes);

void save_weights(const QuantizedMlp& model, const std::string& path);
QuantizedMlp load_weights(const std::string& path);

}  // namespace seccan::qnn
