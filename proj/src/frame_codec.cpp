// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "seccan/frame_codec.hpp"

#include <algorithm>
#include <cstdio>

#include "seccan/error.hpp"

namespace seccan {

namespace {

constexpr std::uint16_t kCrcPoly = 0x4599;
constexpr std::uint16_t kCrcMask = 0x7FFF;

constexpr std::array<std::uint16_t, 256> make_crc_table() {
  std::array<std::uint16_t, 256> table{};
  for (unsigned i = 0; i < 256; ++i) {
    std::uint16_t reg = static_cast<std::uint16_t>(i << 7);
    for (int k = 0; k < 8; ++k) {
      const bool top = (reg & 0x4000) != 0;
      reg = static_cast<std::uint16_t>((reg << 1) & kCrcMask);
      if (top) reg ^= kCrcPoly;
    }
    table[i] = reg;
  }
  return table;
}

constexpr auto kCrcTable = make_crc_table();

void append_field(BitVector& out, std::uint32_t value, int width) {
  for (int i = width - 1; i >= 0; --i) {
    out.push_back(static_cast<std::uint8_t>((value >> i) & 1u));
  }
}

BitStream finish_frame(BitVector raw) {
  const std::uint16_t crc = crc15(raw);
  append_field(raw, crc, 15);
  BitStream stream;
  stream.bits = stuff(raw);
  stream.stuffed_region_end = stream.bits.size();
  // CRC delimiter, ACK slot, ACK delimiter
  stream.bits.push_back(kRecessive);
  stream.bits.push_back(kDominant);
  stream.bits.push_back(kRecessive);
  // EOF + IFS
  stream.bits.insert(stream.bits.end(), 7 + 3, kRecessive);
  return stream;
}

void append_payload(BitVector& raw, std::span<const std::uint8_t> payload) {
  for (std::uint8_t byte : payload) append_field(raw, byte, 8);
}

}  // namespace

CanFrame::CanFrame(std::uint16_t id, std::span<const std::uint8_t> payload)
    : id_(id), dlc_(static_cast<std::uint8_t>(payload.size())) {
  if (id > kMaxStandardId) {
    throw Error(ErrorCode::kInvalidFrame, "identifier exceeds 11 bits");
  }
  if (payload.size() > kMaxPayload) {
    throw Error(ErrorCode::kInvalidFrame, "payload longer than 8 bytes");
  }
  std::copy(payload.begin(), payload.end(), data_.begin());
}

CanFrame::CanFrame(std::uint16_t id, std::initializer_list<std::uint8_t> payload)
    : CanFrame(id, std::span<const std::uint8_t>(payload.begin(), payload.size())) {}

CanFrame CanFrame::remote(std::uint16_t id, std::uint8_t dlc) {
  if (id > kMaxStandardId) {
    throw Error(ErrorCode::kInvalidFrame, "identifier exceeds 11 bits");
  }
  if (dlc > kMaxPayload) {
    throw Error(ErrorCode::kInvalidFrame, "DLC above 8");
  }
  CanFrame frame;
  frame.id_ = id;
  frame.dlc_ = dlc;
  frame.remote_ = true;
  return frame;
}

std::string to_string(const CanFrame& frame) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%03X%s [%u]", frame.id(),
                frame.is_remote() ? " RTR" : "", unsigned{frame.dlc()});
  std::string out = buf;
  for (std::uint8_t b : frame.payload()) {
    std::snprintf(buf, sizeof buf, " %02X", b);
    out += buf;
  }
  return out;
}

std::uint16_t crc15(std::span<const std::uint8_t> bits) {
  std::uint16_t reg = 0;
  std::size_t i = 0;
  for (; i + 8 <= bits.size(); i += 8) {
    unsigned byte = 0;
    for (std::size_t k = 0; k < 8; ++k) byte = (byte << 1) | (bits[i + k] & 1u);
    const unsigned index = ((reg >> 7) ^ byte) & 0xFFu;
    reg = static_cast<std::uint16_t>(((reg << 8) ^ kCrcTable[index]) & kCrcMask);
  }
  for (; i < bits.size(); ++i) {
    const bool next = ((bits[i] & 1u) ^ ((reg >> 14) & 1u)) != 0;
    reg = static_cast<std::uint16_t>((reg << 1) & kCrcMask);
    if (next) reg ^= kCrcPoly;
  }
  return reg;
}

BitVector stuff(std::span<const std::uint8_t> bits) {
  BitVector out;
  out.reserve(bits.size() + bits.size() / 4 + 1);
  std::uint8_t last = 2;
  int run = 0;
  for (std::uint8_t bit : bits) {
    out.push_back(bit);
    run = (bit == last) ? run + 1 : 1;
    last = bit;
    if (run == 5) {
      last = static_cast<std::uint8_t>(bit ^ 1u);
      out.push_back(last);
      run = 1;
    }
  }
  return out;
}

std::size_t stuff_count(std::span<const std::uint8_t> bits) {
  std::size_t count = 0;
  std::uint8_t last = 2;
  int run = 0;
  for (std::uint8_t bit : bits) {
    run = (bit == last) ? run + 1 : 1;
    last = bit;
    if (run == 5) {
      ++count;
      last = static_cast<std::uint8_t>(bit ^ 1u);
      run = 1;
    }
  }
  return count;
}

std::optional<BitVector> unstuff(std::span<const std::uint8_t> bits) {
  BitVector out;
  out.reserve(bits.size());
  std::uint8_t last = 2;
  int run = 0;
  bool expect_stuff = false;
  for (std::uint8_t bit : bits) {
    if (expect_stuff) {
      if (bit == last) return std::nullopt;
      expect_stuff = false;
      last = bit;
      run = 1;
      continue;
    }
    out.push_back(bit);
    run = (bit == last) ? run + 1 : 1;
    last = bit;
    if (run == 5) expect_stuff = true;
  }
  return out;
}

BitStream encode_frame_raw(std::uint16_t id, std::uint8_t dlc_field,
                           std::span<const std::uint8_t> payload, bool remote) {
  if (id > kMaxStandardId) {
    throw Error(ErrorCode::kInvalidFrame, "identifier exceeds 11 bits");
  }
  if (dlc_field > 15) {
    throw Error(ErrorCode::kInvalidFrame, "DLC field exceeds 4 bits");
  }
  const std::size_t data_len =
      remote ? 0 : std::min<std::size_t>(dlc_field, kMaxPayload);
  if (payload.size() != data_len) {
    throw Error(ErrorCode::kInvalidFrame, "payload length does not match DLC");
  }
  BitVector raw;
  raw.reserve(19 + 8 * data_len + 15);
  raw.push_back(kDominant);  // SOF
  append_field(raw, id, 11);
  raw.push_back(remote ? kRecessive : kDominant);  // RTR
  raw.push_back(kDominant);                        // IDE
  raw.push_back(kDominant);                        // r0
  append_field(raw, dlc_field, 4);
  append_payload(raw, payload);
  return finish_frame(std::move(raw));
}

BitStream encode_frame(const CanFrame& frame) {
  return encode_frame_raw(frame.id(), frame.dlc(), frame.payload(),
                          frame.is_remote());
}

BitStream encode_extended_frame(std::uint32_t id29,
                                std::span<const std::uint8_t> payload) {
  if (id29 > 0x1FFFFFFFu) {
    throw Error(ErrorCode::kInvalidFrame, "extended identifier exceeds 29 bits");
  }
  if (payload.size() > kMaxPayload) {
    throw Error(ErrorCode::kInvalidFrame, "payload longer than 8 bytes");
  }
  BitVector raw;
  raw.push_back(kDominant);
  append_field(raw, id29 >> 18, 11);
  raw.push_back(kRecessive);  // SRR
  raw.push_back(kRecessive);  // IDE
  append_field(raw, id29 & 0x3FFFFu, 18);
  raw.push_back(kDominant);  // RTR
  raw.push_back(kDominant);  // r1
  raw.push_back(kDominant);  // r0
  append_field(raw, static_cast<std::uint32_t>(payload.size()), 4);
  append_payload(raw, payload);
  return finish_frame(std::move(raw));
}

const char* to_string(DecodeError error) {
  switch (error) {
    case DecodeError::kStuff: return "StuffError";
    case DecodeError::kCrc: return "CrcError";
    case DecodeError::kForm: return "FormError";
    case DecodeError::kTruncated: return "TruncatedError";
  }
  return "DecodeError";
}

// ---------------------------------------------------------------------------
// FrameDecoder

void FrameDecoder::fail(DecodeError error) {
  state_ = State::kFailed;
  error_ = error;
}

FrameDecoder::State FrameDecoder::push(std::uint8_t bit) {
  if (state_ != State::kReceiving) return state_;
  bit &= 1u;
  ++wire_index_;

  const bool stuffed_region = field_ <= Field::kCrc;
  if (!stuffed_region) {
    on_tail(bit);
    return state_;
  }

  if (expect_stuff_) {
    if (bit == last_bit_) {
      fail(DecodeError::kStuff);
      return state_;
    }
    expect_stuff_ = false;
    last_bit_ = bit;
    run_ = 1;
  } else {
    run_ = (bit == last_bit_) ? run_ + 1 : 1;
    last_bit_ = bit;
    if (run_ == 5) expect_stuff_ = true;
    on_destuffed(bit);
  }

  // The stuffed region closes after the 15th CRC bit, or after the stuff
  // bit that follows it.
  if (state_ == State::kReceiving && field_ == Field::kCrc &&
      field_bits_ == 15 && !expect_stuff_) {
    events_.crc_done = wire_index_;
    if (crc15(crc_input_) != crc_received_) {
      fail(DecodeError::kCrc);
      return state_;
    }
    field_ = Field::kCrcDelim;
    field_bits_ = 0;
  }
  return state_;
}

void FrameDecoder::enter_data_or_crc() {
  header_seen_ = true;
  events_.header_done = wire_index_;
  data_len_ = remote_ ? 0 : std::min<std::size_t>(dlc_field_, kMaxPayload);
  field_ = data_len_ > 0 ? Field::kData : Field::kCrc;
  field_bits_ = 0;
}

void FrameDecoder::on_destuffed(std::uint8_t bit) {
  if (field_ != Field::kCrc) crc_input_.push_back(bit);
  ++field_bits_;
  auto next = [this](Field f) {
    field_ = f;
    field_bits_ = 0;
  };
  switch (field_) {
    case Field::kSof:
      if (bit != kDominant) return fail(DecodeError::kForm);
      next(Field::kId);
      break;
    case Field::kId:
      base_id_ = (base_id_ << 1) | bit;
      if (field_bits_ == 11) next(Field::kRtrOrSrr);
      break;
    case Field::kRtrOrSrr:
      remote_ = bit == kRecessive;
      next(Field::kIde);
      break;
    case Field::kIde:
      if (bit == kRecessive) {
        // SRR must be recessive in extended format
        if (!remote_) return fail(DecodeError::kForm);
        extended_ = true;
        remote_ = false;
        next(Field::kExtId);
      } else {
        next(Field::kR0);
      }
      break;
    case Field::kExtId:
      ext_id_ = (ext_id_ << 1) | bit;
      if (field_bits_ == 18) next(Field::kExtRtr);
      break;
    case Field::kExtRtr:
      remote_ = bit == kRecessive;
      next(Field::kR1);
      break;
    case Field::kR1:
      next(Field::kR0);
      break;
    case Field::kR0:
      next(Field::kDlc);
      break;
    case Field::kDlc:
      dlc_field_ = static_cast<std::uint8_t>((dlc_field_ << 1) | bit);
      if (field_bits_ == 4) enter_data_or_crc();
      break;
    case Field::kData: {
      auto& byte = data_[bytes_done_];
      byte = static_cast<std::uint8_t>((byte << 1) | bit);
      if (field_bits_ == 8) {
        ++bytes_done_;
        events_.byte_done.push_back(wire_index_);
        field_bits_ = 0;
        if (bytes_done_ == data_len_) next(Field::kCrc);
      }
      break;
    }
    case Field::kCrc:
      crc_received_ = static_cast<std::uint16_t>((crc_received_ << 1) | bit);
      break;
    default:
      break;
  }
}

void FrameDecoder::on_tail(std::uint8_t bit) {
  ++field_bits_;
  switch (field_) {
    case Field::kCrcDelim:
      if (bit != kRecessive) return fail(DecodeError::kForm);
      field_ = Field::kAck;
      field_bits_ = 0;
      break;
    case Field::kAck:
      field_ = Field::kAckDelim;
      field_bits_ = 0;
      break;
    case Field::kAckDelim:
      if (bit != kRecessive) return fail(DecodeError::kForm);
      field_ = Field::kEof;
      field_bits_ = 0;
      break;
    case Field::kEof:
      if (bit != kRecessive) return fail(DecodeError::kForm);
      if (field_bits_ == 7) {
        events_.eof_done = wire_index_;
        field_ = Field::kIfs;
        field_bits_ = 0;
      }
      break;
    case Field::kIfs:
      if (bit != kRecessive) return fail(DecodeError::kForm);
      if (field_bits_ == 3) {
        events_.ifs_done = wire_index_;
        state_ = State::kDone;
      }
      break;
    default:
      break;
  }
}

DecodedFrame FrameDecoder::result() const {
  DecodedFrame out;
  const auto id = static_cast<std::uint16_t>(base_id_ & kMaxStandardId);
  const auto dlc = static_cast<std::uint8_t>(
      std::min<std::size_t>(dlc_field_, kMaxPayload));
  out.frame = remote_ ? CanFrame::remote(id, dlc)
                      : CanFrame(id, std::span<const std::uint8_t>(data_.data(), data_len_));
  out.events = events_;
  out.extended = extended_;
  out.extended_id = extended_ ? ((base_id_ << 18) | ext_id_) : 0;
  out.dlc_clamped = dlc_field_ > kMaxPayload;
  return out;
}

DecodeResult decode_frame(std::span<const std::uint8_t> bits) {
  FrameDecoder decoder;
  DecodeResult result;
  std::size_t i = 0;
  for (; i < bits.size() && decoder.state() == FrameDecoder::State::kReceiving; ++i) {
    decoder.push(bits[i]);
  }
  result.events = decoder.events();
  switch (decoder.state()) {
    case FrameDecoder::State::kReceiving:
      result.error = DecodeError::kTruncated;
      break;
    case FrameDecoder::State::kFailed:
      result.error = decoder.error();
      break;
    case FrameDecoder::State::kDone:
      if (i != bits.size()) {
        result.error = DecodeError::kForm;
      } else {
        result.decoded = decoder.result();
      }
      break;
  }
  return result;
}

}  // namespace seccan
