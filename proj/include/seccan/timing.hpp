// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seccan/frame_codec.hpp"

namespace seccan {

/// Which protocol edge marks completion of a frame reception.
enum class FrameDoneConvention {
  kEndOfEof,
  kEndOfIfs,
  /// End of EOF plus the longest superposed error-flag sequence (12 bits):
  /// the last instant at which the frame can still be rejected.
  kEndOfErrorFlags,
};

const char* to_string(FrameDoneConvention convention);
std::optional<FrameDoneConvention> parse_convention(const std::string& text);

/// Error-flag superposition span following EOF, in bit times.
constexpr std::int64_t kErrorFlagSpanBits = 12;

/// Measured IDS latency of the reference design: 36.5 us at 16 MHz.
constexpr std::int64_t kDefaultIdsCycles = 584;

struct TimingConfig {
  std::int64_t bitrate_bps = 1'000'000;
  std::int64_t controller_clock_hz = 16'000'000;
  FrameDoneConvention frame_done = FrameDoneConvention::kEndOfErrorFlags;

  /// Throws Error(kConfig) unless bitrate > 0, clock >= bitrate and the
  /// clock divides evenly into bit times.
  void validate() const;
  std::int64_t cycles_per_bit() const { return controller_clock_hz / bitrate_bps; }
};

/// Times are kept as integer controller clock cycles; microseconds are a
/// derived view.
double cycles_to_us(std::int64_t cycles, const TimingConfig& cfg);
std::int64_t bits_to_cycles(std::int64_t bits, const TimingConfig& cfg);
double bit_index_to_time_us(std::int64_t index, const TimingConfig& cfg);

/// Bit count (from SOF) at which frame_done fires for these events.
std::int64_t frame_done_bits(const DecodeEvents& events, FrameDoneConvention c);
/// Bit count at which data_en asserts: last payload byte written, or header
/// completion for frames without payload.
std::int64_t data_en_bits(const DecodeEvents& events);

struct FrameTimeline {
  std::int64_t header_detected = 0;  // cycles, all relative to SOF
  std::int64_t data_en = 0;
  std::int64_t frame_done = 0;
  std::optional<std::int64_t> ids_output_ready;
  std::vector<std::int64_t> byte_writes;

  friend bool operator==(const FrameTimeline&, const FrameTimeline&) = default;
};

FrameTimeline make_timeline(const DecodeEvents& events, const TimingConfig& cfg);

struct ReceptionWindow {
  std::int64_t t_max_cycles = 0;     // header_detected -> frame_done
  std::int64_t t_window_cycles = 0;  // data_en -> frame_done
  double t_max_us = 0;
  double t_window_us = 0;
};

ReceptionWindow reception_window(const CanFrame& frame, const TimingConfig& cfg);
ReceptionWindow reception_window(const DecodeEvents& events, const TimingConfig& cfg);

struct RealtimeCheck {
  bool meets = false;
  std::int64_t slack_cycles = 0;
  double slack_us = 0;
};

RealtimeCheck check_realtime(std::int64_t ids_latency_cycles, const CanFrame& frame,
                             const TimingConfig& cfg);

}  // namespace seccan
