// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "seccan/controller.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>

#include "seccan/error.hpp"

namespace seccan {

const char* to_string(IdsFlag flag) {
  return flag == IdsFlag::kAttack ? "attack" : "benign";
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kHeaderDetected: return "HeaderDetected";
    case EventKind::kIdsEnabled: return "IdsEnabled";
    case EventKind::kByteWritten: return "ByteWritten";
    case EventKind::kDataEnAsserted: return "DataEnAsserted";
    case EventKind::kIdsOutputReady: return "IdsOutputReady";
    case EventKind::kFrameDone: return "FrameDone";
    case EventKind::kFrameDropped: return "FrameDropped";
    case EventKind::kLatencyViolation: return "LatencyViolation";
    case EventKind::kDecodeWarning: return "DecodeWarning";
  }
  return "?";
}

std::string format_event(const ControllerEvent& event, const TimingConfig& cfg) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%" PRId64 ", %.4f, %s", event.bit_index,
                cycles_to_us(event.cycle, cfg), to_string(event.kind));
  std::string line = buf;
  line += ", ";
  line += event.detail;
  return line;
}

void ControllerConfig::validate() const {
  timing.validate();
  if (ids_latency_cycles < 0) throw Error(ErrorCode::kConfig, "IDS latency must be non-negative");
}

Controller::Controller(ControllerConfig cfg, std::shared_ptr<const Detector> detector)
    : cfg_(cfg), detector_(std::move(detector)) {
  cfg_.validate();
}

void Controller::reset() {
  previous_.reset();
  log_.clear();
  bus_bit_ = 0;
}

void Controller::idle(std::int64_t bits) {
  if (bits > 0) bus_bit_ += bits;
}

FeedResult Controller::feed_bits(std::span<const std::uint8_t> bits) {
  const std::int64_t cpb = cfg_.timing.cycles_per_bit();
  const std::int64_t start = bus_bit_;
  auto cycle_at = [&](std::int64_t rel_bits) { return (start + rel_bits) * cpb; };

  FeedResult result;
  auto emit = [&](EventKind kind, std::int64_t cycle, std::string detail) {
    result.events.push_back(ControllerEvent{kind, cycle, cycle / cpb, start, std::move(detail)});
  };
  char buf[96];

  FrameDecoder decoder;
  bool header_emitted = false;
  bool data_en_reached = false;
  bool skip_ids = true;
  std::size_t bytes_emitted = 0;
  std::optional<std::int64_t> ids_ready;
  IdsFlag verdict = IdsFlag::kBenign;
  FeatureVector feature;

  std::size_t consumed = 0;
  while (consumed < bits.size() && decoder.state() == FrameDecoder::State::kReceiving) {
    decoder.push(bits[consumed++]);
    const DecodeEvents& ev = decoder.events();

    if (!header_emitted && decoder.header_seen()) {
      header_emitted = true;
      const std::int64_t c = cycle_at(static_cast<std::int64_t>(ev.header_done));
      std::snprintf(buf, sizeof buf, "sof_bit=%" PRId64 " id=0x%03X dlc=%u", start,
                    decoder.base_id(), unsigned{decoder.dlc_field()});
      emit(EventKind::kHeaderDetected, c, buf);
      if (decoder.dlc_field() > kMaxPayload) {
        std::snprintf(buf, sizeof buf, "dlc field %u clamped to 8", unsigned{decoder.dlc_field()});
        emit(EventKind::kDecodeWarning, c, buf);
      }
      if (decoder.extended()) emit(EventKind::kDecodeWarning, c, "extended identifier, IDS bypassed");
      if (decoder.remote()) emit(EventKind::kDecodeWarning, c, "remote frame, IDS bypassed");
      skip_ids = detector_ == nullptr || decoder.extended() || decoder.remote();
      if (!skip_ids) emit(EventKind::kIdsEnabled, c, "");
    }

    while (bytes_emitted < decoder.bytes().size()) {
      std::snprintf(buf, sizeof buf, "byte=%zu value=0x%02X", bytes_emitted,
                    decoder.bytes()[bytes_emitted]);
      emit(EventKind::kByteWritten, cycle_at(static_cast<std::int64_t>(ev.byte_done[bytes_emitted])),
           buf);
      ++bytes_emitted;
    }

    // write_flag count matches DLC: the feature FIFO holds the whole frame.
    if (header_emitted && !data_en_reached && decoder.bytes().size() == decoder.expected_bytes()) {
      data_en_reached = true;
      const CanFrame current(decoder.base_id(), decoder.bytes());
      feature = collect_features(current, previous_ ? &*previous_ : nullptr);
      if (!skip_ids) {
        const std::int64_t c = cycle_at(data_en_bits(ev));
        std::snprintf(buf, sizeof buf, "bytes=%zu", decoder.bytes().size());
        emit(EventKind::kDataEnAsserted, c, buf);
        verdict = detector_->classify(feature);
        ids_ready = c + cfg_.ids_latency_cycles;
      }
    }
  }

  const auto by_cycle = [](const ControllerEvent& a, const ControllerEvent& b) {
    return a.cycle < b.cycle;
  };

  if (decoder.state() != FrameDecoder::State::kDone) {
    const DecodeError error =
        decoder.state() == FrameDecoder::State::kFailed ? decoder.error() : DecodeError::kTruncated;
    const std::int64_t drop_cycle = cycle_at(static_cast<std::int64_t>(consumed));
    if (ids_ready && *ids_ready <= drop_cycle) {
      emit(EventKind::kIdsOutputReady, *ids_ready, std::string("verdict=") + to_string(verdict));
    }
    emit(EventKind::kFrameDropped, drop_cycle, to_string(error));
    std::stable_sort(result.events.begin(), result.events.end(), by_cycle);
    result.error = error;
    if (cfg_.keep_log) log_.insert(log_.end(), result.events.begin(), result.events.end());
    bus_bit_ += static_cast<std::int64_t>(bits.size());
    return result;
  }

  const DecodedFrame decoded = decoder.result();
  ReceivedMessage msg;
  msg.frame = decoded.frame;
  msg.extended = decoded.extended;
  msg.extended_id = decoded.extended_id;
  msg.sof_bit = start;
  msg.timeline = make_timeline(decoded.events, cfg_.timing);
  msg.feature = feature;
  msg.ids_skipped = skip_ids;

  const std::int64_t done_cycle = cycle_at(frame_done_bits(decoded.events, cfg_.timing.frame_done));
  if (ids_ready) {
    emit(EventKind::kIdsOutputReady, *ids_ready, std::string("verdict=") + to_string(verdict));
    msg.ids_flag = verdict;
    msg.timeline.ids_output_ready = *ids_ready - start * cpb;
    msg.late = *ids_ready > done_cycle;
  }
  emit(EventKind::kFrameDone, done_cycle, to_string(cfg_.timing.frame_done));
  if (msg.late) {
    std::snprintf(buf, sizeof buf, "ids_ready exceeds frame_done by %" PRId64 " cycles",
                  *ids_ready - done_cycle);
    emit(EventKind::kLatencyViolation, done_cycle, buf);
  }
  std::stable_sort(result.events.begin(), result.events.end(), by_cycle);

  // Only standard data frames enter the feature FIFO.
  if (!decoded.extended && !decoded.frame.is_remote()) previous_ = decoded.frame;

  result.message = std::move(msg);
  if (cfg_.keep_log) log_.insert(log_.end(), result.events.begin(), result.events.end());
  bus_bit_ += static_cast<std::int64_t>(bits.size());
  return result;
}

std::string Controller::event_log_text() const {
  std::string out;
  for (const ControllerEvent& e : log_) {
    out += format_event(e, cfg_.timing);
    out += '\n';
  }
  return out;
}

std::optional<BaselineMessage> receive_baseline(std::span<const std::uint8_t> bits,
                                                const TimingConfig& cfg) {
  cfg.validate();
  const DecodeResult decoded = decode_frame(bits);
  if (!decoded.ok()) return std::nullopt;
  return BaselineMessage{decoded.decoded->frame, make_timeline(decoded.decoded->events, cfg)};
}

}  // namespace seccan
