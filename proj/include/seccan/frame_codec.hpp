// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace seccan {

constexpr std::uint8_t kDominant = 0;
constexpr std::uint8_t kRecessive = 1;

constexpr std::uint16_t kMaxStandardId = 0x7FF;
constexpr std::size_t kMaxPayload = 8;

/// Bit sequence as seen on the bus, one element per bit, each 0 (dominant)
/// or 1 (recessive).
using BitVector = std::vector<std::uint8_t>;

/// Logical CAN 2.0A frame. Bytes past dlc are always zero so that the
/// defaulted comparison is payload equality.
class CanFrame {
 public:
  CanFrame() = default;

  /// Data frame. Throws Error(kInvalidFrame) when id > 0x7FF or the payload
  /// is longer than 8 bytes.
  CanFrame(std::uint16_t id, std::span<const std::uint8_t> payload);
  CanFrame(std::uint16_t id, std::initializer_list<std::uint8_t> payload);

  /// Remote frame requesting dlc bytes; carries no payload.
  static CanFrame remote(std::uint16_t id, std::uint8_t dlc);

  std::uint16_t id() const noexcept { return id_; }
  std::uint8_t dlc() const noexcept { return dlc_; }
  bool is_remote() const noexcept { return remote_; }

  std::span<const std::uint8_t> payload() const noexcept {
    return {data_.data(), remote_ ? 0u : dlc_};
  }
  /// Payload zero-padded to 8 bytes.
  const std::array<std::uint8_t, kMaxPayload>& padded() const noexcept {
    return data_;
  }

  friend bool operator==(const CanFrame&, const CanFrame&) = default;

 private:
  std::uint16_t id_ = 0;
  std::uint8_t dlc_ = 0;
  bool remote_ = false;
  std::array<std::uint8_t, kMaxPayload> data_{};
};

std::string to_string(const CanFrame& frame);

struct BitStream {
  BitVector bits;
  /// One past the last bit of the stuffed region (SOF through CRC sequence,
  /// including a trailing stuff bit when the CRC ends in a 5-run).
  std::size_t stuffed_region_end = 0;
};

/// CAN CRC-15 (generator 0x4599, zero initial value) over unstuffed bits.
std::uint16_t crc15(std::span<const std::uint8_t> bits);

/// Inserts a complement bit after every run of 5 identical bits.
BitVector stuff(std::span<const std::uint8_t> bits);

/// Reverse of stuff(). Returns nullopt on a stuff violation (6 identical
/// bits in a row).
std::optional<BitVector> unstuff(std::span<const std::uint8_t> bits);

/// Number of stuff bits stuff() would insert.
std::size_t stuff_count(std::span<const std::uint8_t> bits);

/// Full bus image of a data or remote frame, including 3 IFS bits. The ACK
/// slot is driven dominant.
BitStream encode_frame(const CanFrame& frame);

/// Encodes with an arbitrary 4-bit DLC field value (9..15 allowed). Payload
/// length is min(dlc_field, 8). Used to build out-of-range test traffic.
BitStream encode_frame_raw(std::uint16_t id, std::uint8_t dlc_field,
                           std::span<const std::uint8_t> payload,
                           bool remote = false);

/// Extended-format (29-bit identifier) data frame.
BitStream encode_extended_frame(std::uint32_t id29,
                                std::span<const std::uint8_t> payload);

enum class DecodeError { kStuff, kCrc, kForm, kTruncated };

const char* to_string(DecodeError error);

/// Milestones of a frame reception, as bit counts from SOF (the value is the
/// number of bus bits consumed when the milestone completes).
struct DecodeEvents {
  std::size_t header_done = 0;  // last DLC bit received
  std::vector<std::size_t> byte_done;
  std::size_t crc_done = 0;  // stuffed region complete, CRC checked
  std::size_t eof_done = 0;
  std::size_t ifs_done = 0;
};

struct DecodedFrame {
  CanFrame frame;
  DecodeEvents events;
  bool extended = false;
  std::uint32_t extended_id = 0;
  /// DLC field was 9..15 and was clamped to 8.
  bool dlc_clamped = false;
};

/// Bit-serial receiver for one frame. push() is called once per bus bit and
/// reports the reception state after that bit.
class FrameDecoder {
 public:
  enum class State { kReceiving, kDone, kFailed };

  State push(std::uint8_t bit);
  State state() const noexcept { return state_; }

  std::size_t bits_consumed() const noexcept { return wire_index_; }
  const DecodeEvents& events() const noexcept { return events_; }
  bool header_seen() const noexcept { return header_seen_; }
  /// Payload bytes completed so far.
  std::span<const std::uint8_t> bytes() const noexcept {
    return {data_.data(), bytes_done_};
  }
  /// Number of payload bytes this frame carries (valid once header_seen()).
  std::size_t expected_bytes() const noexcept { return data_len_; }
  /// Format bits, valid once header_seen().
  bool extended() const noexcept { return extended_; }
  bool remote() const noexcept { return remote_; }
  /// 11-bit base identifier, valid once header_seen().
  std::uint16_t base_id() const noexcept { return static_cast<std::uint16_t>(base_id_ & kMaxStandardId); }
  std::uint8_t dlc_field() const noexcept { return dlc_field_; }
  DecodeError error() const noexcept { return error_; }
  /// Valid once state() == kDone.
  DecodedFrame result() const;

 private:
  enum class Field {
    kSof, kId, kRtrOrSrr, kIde, kExtId, kExtRtr, kR1, kR0, kDlc, kData,
    kCrc, kCrcDelim, kAck, kAckDelim, kEof, kIfs,
  };

  void fail(DecodeError error);
  void on_destuffed(std::uint8_t bit);
  void on_tail(std::uint8_t bit);
  void enter_data_or_crc();

  State state_ = State::kReceiving;
  DecodeError error_ = DecodeError::kTruncated;
  Field field_ = Field::kSof;
  std::size_t field_bits_ = 0;
  std::size_t wire_index_ = 0;

  // destuffing
  std::uint8_t last_bit_ = 2;
  int run_ = 0;
  bool expect_stuff_ = false;

  BitVector crc_input_;
  std::uint16_t crc_received_ = 0;
  std::uint32_t base_id_ = 0;
  std::uint32_t ext_id_ = 0;
  bool extended_ = false;
  bool remote_ = false;
  std::uint8_t dlc_field_ = 0;
  std::size_t data_len_ = 0;
  std::size_t bytes_done_ = 0;
  std::array<std::uint8_t, kMaxPayload> data_{};
  bool header_seen_ = false;
  DecodeEvents events_;
};

struct DecodeResult {
  std::optional<DecodedFrame> decoded;
  DecodeError error = DecodeError::kTruncated;
  /// Milestones reached before the failure (or the full set on success).
  DecodeEvents events;

  bool ok() const noexcept { return decoded.has_value(); }
};

/// Decodes exactly one frame. The stream must end at the last IFS bit.
DecodeResult decode_frame(std::span<const std::uint8_t> bits);
inline DecodeResult decode_frame(const BitStream& stream) {
  return decode_frame(stream.bits);
}

}  // namespace seccan
