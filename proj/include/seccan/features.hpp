// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "seccan/frame_codec.hpp"

namespace seccan {

constexpr std::size_t kFeatureBytes = 20;

/// Model input: (id, zero-padded payload) of the previous and the current
/// message. Layout: [prev_id_hi, prev_id_lo, prev_b0..b7, cur_id_hi,
/// cur_id_lo, cur_b0..b7]; identifiers split big-endian.
struct FeatureVector {
  std::array<std::uint8_t, kFeatureBytes> bytes{};
  /// False when no previous message exists (prev slot is all zero).
  bool valid = false;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

FeatureVector collect_features(const CanFrame& current, const CanFrame* previous);

}  // namespace seccan
