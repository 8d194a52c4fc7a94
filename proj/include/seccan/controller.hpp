// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seccan/features.hpp"
#include "seccan/frame_codec.hpp"
#include "seccan/qnn.hpp"
#include "seccan/timing.hpp"

namespace seccan {

enum class IdsFlag : std::uint8_t { kBenign = 0, kAttack = 1 };

const char* to_string(IdsFlag flag);

/// Verdict source plugged into the receive datapath.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual IdsFlag classify(const FeatureVector& features) const = 0;
};

/// Wraps the integer model; the verdict is taken from the sign of the output
/// accumulator so no floating point enters the datapath.
class QnnDetector final : public Detector {
 public:
  explicit QnnDetector(qnn::QuantizedMlp model) : model_(std::move(model)) {}
  IdsFlag classify(const FeatureVector& features) const override {
    return model_.is_attack(features) ? IdsFlag::kAttack : IdsFlag::kBenign;
  }
  const qnn::QuantizedMlp& model() const noexcept { return model_; }

 private:
  qnn::QuantizedMlp model_;
};

enum class EventKind {
  kHeaderDetected,
  kIdsEnabled,
  kByteWritten,
  kDataEnAsserted,
  kIdsOutputReady,
  kFrameDone,
  kFrameDropped,
  kLatencyViolation,
  kDecodeWarning,
};

const char* to_string(EventKind kind);

struct ControllerEvent {
  EventKind kind = EventKind::kHeaderDetected;
  std::int64_t cycle = 0;      // absolute controller clock
  std::int64_t bit_index = 0;  // absolute bus bit position (floor of cycle)
  std::int64_t sof_bit = 0;    // SOF of the frame the event belongs to
  std::string detail;

  friend bool operator==(const ControllerEvent&, const ControllerEvent&) = default;
};

/// "bit_index, bus_time_us, event_kind, detail"
std::string format_event(const ControllerEvent& event, const TimingConfig& cfg);

struct ReceivedMessage {
  CanFrame frame;
  IdsFlag ids_flag = IdsFlag::kBenign;
  /// Verdict arrived after frame_done.
  bool late = false;
  /// Frame bypassed the IDS (no detector, remote or extended frame).
  bool ids_skipped = false;
  bool extended = false;
  std::uint32_t extended_id = 0;
  /// Relative to the frame's SOF, in controller cycles.
  FrameTimeline timeline;
  FeatureVector feature;
  std::int64_t sof_bit = 0;  // absolute
};

struct FeedResult {
  std::vector<ControllerEvent> events;
  std::optional<ReceivedMessage> message;
  std::optional<DecodeError> error;
};

struct ControllerConfig {
  TimingConfig timing;
  std::int64_t ids_latency_cycles = kDefaultIdsCycles;
  /// Retain events in event_log(); long replays turn this off.
  bool keep_log = true;

  void validate() const;
};

/// Receive datapath with the IDS tap. One frame per feed_bits() call; bus
/// time accumulates across calls. Without a detector it behaves as the plain
/// controller.
class Controller {
 public:
  explicit Controller(ControllerConfig cfg, std::shared_ptr<const Detector> detector = nullptr);

  /// Clears the previous-message slot, the event log and the bus clock.
  void reset();
  /// Clears only the previous-message slot (a new, unrelated trace segment).
  void forget_previous() { previous_.reset(); }

  FeedResult feed_bits(std::span<const std::uint8_t> bits);
  FeedResult feed_bits(const BitStream& stream) { return feed_bits(stream.bits); }

  /// Advances the bus clock over idle (recessive) bit times.
  void idle(std::int64_t bits);

  const std::vector<ControllerEvent>& event_log() const noexcept { return log_; }
  std::string event_log_text() const;
  const std::optional<CanFrame>& previous() const noexcept { return previous_; }
  std::int64_t bus_bit() const noexcept { return bus_bit_; }
  const ControllerConfig& config() const noexcept { return cfg_; }

 private:
  ControllerConfig cfg_;
  std::shared_ptr<const Detector> detector_;
  std::optional<CanFrame> previous_;
  std::vector<ControllerEvent> log_;
  std::int64_t bus_bit_ = 0;
};

/// Receive path without the IDS extension: decode and time-stamp only.
struct BaselineMessage {
  CanFrame frame;
  FrameTimeline timeline;
};

std::optional<BaselineMessage> receive_baseline(std::span<const std::uint8_t> bits,
                                                const TimingConfig& cfg);

}  // namespace seccan
