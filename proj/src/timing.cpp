// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "seccan/timing.hpp"

#include "seccan/error.hpp"

namespace seccan {

const char* to_string(FrameDoneConvention convention) {
  switch (convention) {
    case FrameDoneConvention::kEndOfEof: return "end_of_eof";
    case FrameDoneConvention::kEndOfIfs: return "end_of_ifs";
    case FrameDoneConvention::kEndOfErrorFlags: return "end_of_error_flags";
  }
  return "?";
}

std::optional<FrameDoneConvention> parse_convention(const std::string& text) {
  if (text == "end_of_eof") return FrameDoneConvention::kEndOfEof;
  if (text == "end_of_ifs") return FrameDoneConvention::kEndOfIfs;
  if (text == "end_of_error_flags") return FrameDoneConvention::kEndOfErrorFlags;
  return std::nullopt;
}

void TimingConfig::validate() const {
  if (bitrate_bps <= 0) throw Error(ErrorCode::kConfig, "bitrate must be positive");
  if (controller_clock_hz < bitrate_bps) {
    throw Error(ErrorCode::kConfig, "controller clock must be at least the bitrate");
  }
  if (controller_clock_hz % bitrate_bps != 0) {
    throw Error(ErrorCode::kConfig, "controller clock must be a multiple of the bitrate");
  }
}

double cycles_to_us(std::int64_t cycles, const TimingConfig& cfg) {
  return static_cast<double>(cycles) * 1e6 / static_cast<double>(cfg.controller_clock_hz);
}

std::int64_t bits_to_cycles(std::int64_t bits, const TimingConfig& cfg) {
  return bits * cfg.cycles_per_bit();
}

double bit_index_to_time_us(std::int64_t index, const TimingConfig& cfg) {
  return static_cast<double>(index) * 1e6 / static_cast<double>(cfg.bitrate_bps);
}

std::int64_t frame_done_bits(const DecodeEvents& events, FrameDoneConvention c) {
  const auto eof = static_cast<std::int64_t>(events.eof_done);
  switch (c) {
    case FrameDoneConvention::kEndOfEof: return eof;
    case FrameDoneConvention::kEndOfIfs: return static_cast<std::int64_t>(events.ifs_done);
    case FrameDoneConvention::kEndOfErrorFlags: return eof + kErrorFlagSpanBits;
  }
  return eof;
}

std::int64_t data_en_bits(const DecodeEvents& events) {
  return static_cast<std::int64_t>(events.byte_done.empty() ? events.header_done
                                                            : events.byte_done.back());
}

FrameTimeline make_timeline(const DecodeEvents& events, const TimingConfig& cfg) {
  FrameTimeline t;
  t.header_detected = bits_to_cycles(static_cast<std::int64_t>(events.header_done), cfg);
  t.data_en = bits_to_cycles(data_en_bits(events), cfg);
  t.frame_done = bits_to_cycles(frame_done_bits(events, cfg.frame_done), cfg);
  t.byte_writes.reserve(events.byte_done.size());
  for (std::size_t b : events.byte_done) {
    t.byte_writes.push_back(bits_to_cycles(static_cast<std::int64_t>(b), cfg));
  }
  return t;
}

ReceptionWindow reception_window(const DecodeEvents& events, const TimingConfig& cfg) {
  cfg.validate();
  const FrameTimeline t = make_timeline(events, cfg);
  ReceptionWindow w;
  w.t_max_cycles = t.frame_done - t.header_detected;
  w.t_window_cycles = t.frame_done - t.data_en;
  w.t_max_us = cycles_to_us(w.t_max_cycles, cfg);
  w.t_window_us = cycles_to_us(w.t_window_cycles, cfg);
  return w;
}

ReceptionWindow reception_window(const CanFrame& frame, const TimingConfig& cfg) {
  const DecodeResult decoded = decode_frame(encode_frame(frame));
  if (!decoded.ok()) {
    throw Error(ErrorCode::kInvalidFrame, "frame failed to round-trip through the codec");
  }
  return reception_window(decoded.decoded->events, cfg);
}

RealtimeCheck check_realtime(std::int64_t ids_latency_cycles, const CanFrame& frame,
                             const TimingConfig& cfg) {
  if (ids_latency_cycles < 0) {
    throw Error(ErrorCode::kInvalidArgument, "IDS latency must be non-negative");
  }
  const ReceptionWindow w = reception_window(frame, cfg);
  RealtimeCheck check;
  check.slack_cycles = w.t_window_cycles - ids_latency_cycles;
  check.meets = check.slack_cycles >= 0;
  check.slack_us = cycles_to_us(check.slack_cycles, cfg);
  return check;
}

}  // namespace seccan
