// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "seccan/features.hpp"

#include <algorithm>

namespace seccan {

namespace {

void write_slot(std::uint8_t* slot, const CanFrame& frame) {
  slot[0] = static_cast<std::uint8_t>(frame.id() >> 8);
  slot[1] = static_cast<std::uint8_t>(frame.id() & 0xFF);
  std::copy(frame.padded().begin(), frame.padded().end(), slot + 2);
}

}  // namespace

FeatureVector collect_features(const CanFrame& current, const CanFrame* previous) {
  FeatureVector fv;
  if (previous != nullptr) {
    write_slot(fv.bytes.data(), *previous);
    fv.valid = true;
  }
  write_slot(fv.bytes.data() + 10, current);
  return fv;
}

}  // namespace seccan
