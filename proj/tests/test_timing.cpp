// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>
#include <vector>

#include "seccan/error.hpp"
#include "seccan/features.hpp"
#include "seccan/timing.hpp"

using namespace seccan;

namespace {

TimingConfig config(std::int64_t bitrate, std::int64_t clock, FrameDoneConvention c) {
  TimingConfig t;
  t.bitrate_bps = bitrate;
  t.controller_clock_hz = clock;
  t.frame_done = c;
  return t;
}

DecodeEvents events_of(const CanFrame& f) {
  const DecodeResult r = decode_frame(encode_frame(f));
  REQUIRE(r.ok());
  return r.decoded->events;
}

}  // namespace

TEST_CASE("bit index to bus time") {
  const TimingConfig t = config(500'000, 16'000'000, FrameDoneConvention::kEndOfEof);
  CHECK(bit_index_to_time_us(44, t) == doctest::Approx(88.0));
  CHECK(bits_to_cycles(44, t) == 44 * 32);
  CHECK(cycles_to_us(584, TimingConfig{}) == doctest::Approx(36.5));
}

TEST_CASE("configuration validation") {
  CHECK_NOTHROW(TimingConfig{}.validate());
  CHECK_THROWS_AS(config(0, 16'000'000, FrameDoneConvention::kEndOfEof).validate(), Error);
  CHECK_THROWS_AS(config(1'000'000, 500'000, FrameDoneConvention::kEndOfEof).validate(), Error);
  CHECK_THROWS_AS(config(300'000, 16'000'000, FrameDoneConvention::kEndOfEof).validate(), Error);
  try {
    config(-5, 16'000'000, FrameDoneConvention::kEndOfEof).validate();
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
  }
}

TEST_CASE("frame_done conventions") {
  CHECK(parse_convention("end_of_eof") == FrameDoneConvention::kEndOfEof);
  CHECK(parse_convention("end_of_ifs") == FrameDoneConvention::kEndOfIfs);
  CHECK(parse_convention("end_of_error_flags") == FrameDoneConvention::kEndOfErrorFlags);
  CHECK_FALSE(parse_convention("eof").has_value());
  CHECK(TimingConfig{}.frame_done == FrameDoneConvention::kEndOfErrorFlags);

  const DecodeEvents e = events_of(CanFrame(0x7FF, {0, 0, 0, 0, 0, 0, 0, 0}));
  CHECK(frame_done_bits(e, FrameDoneConvention::kEndOfEof) == 123);
  CHECK(frame_done_bits(e, FrameDoneConvention::kEndOfIfs) == 126);
  CHECK(frame_done_bits(e, FrameDoneConvention::kEndOfErrorFlags) == 135);
  CHECK(data_en_bits(e) == 98);
}

TEST_CASE("data_en of an empty frame is the header") {
  const DecodeEvents e = events_of(CanFrame(0x7FF, {}));
  CHECK(data_en_bits(e) == 22);
  CHECK(data_en_bits(e) == static_cast<std::int64_t>(e.header_done));
  CHECK(frame_done_bits(e, FrameDoneConvention::kEndOfEof) == 47);
}

TEST_CASE("reception windows match the reference walk") {
  // data_en -> frame_done in bit times, from an independent bit walk
  struct Case {
    std::uint16_t id;
    std::uint8_t fill;
    int dlc;
    std::int64_t ifs, eflag;
  };
  const std::vector<Case> cases = {
      {0x7FF, 0x00, 0, 28, 37}, {0x7FF, 0xFF, 0, 28, 37}, {0x123, 0x55, 0, 28, 37},
      {0x7FF, 0x00, 1, 29, 38}, {0x7FF, 0xFF, 8, 29, 38}, {0x123, 0x55, 8, 29, 38},
  };
  const TimingConfig t = config(1'000'000, 16'000'000, FrameDoneConvention::kEndOfIfs);
  for (const Case& c : cases) {
    const std::vector<std::uint8_t> data(static_cast<std::size_t>(c.dlc), c.fill);
    const CanFrame f(c.id, data);
    TimingConfig ti = t;
    CHECK(reception_window(f, ti).t_window_cycles == c.ifs * 16);
    ti.frame_done = FrameDoneConvention::kEndOfErrorFlags;
    CHECK(reception_window(f, ti).t_window_cycles == c.eflag * 16);
  }
}

TEST_CASE("window scales with bitrate") {
  const CanFrame f(0x123, {1, 2, 3, 4, 5});
  const ReceptionWindow a = reception_window(f, config(1'000'000, 16'000'000, FrameDoneConvention::kEndOfErrorFlags));
  const ReceptionWindow b = reception_window(f, config(500'000, 16'000'000, FrameDoneConvention::kEndOfErrorFlags));
  CHECK(b.t_window_us == doctest::Approx(2.0 * a.t_window_us));
  CHECK(b.t_max_us == doctest::Approx(2.0 * a.t_max_us));
  CHECK(b.t_window_cycles == 2 * a.t_window_cycles);
  CHECK(a.t_max_cycles > a.t_window_cycles);
}

TEST_CASE("reference latency fits every dlc") {
  const TimingConfig t{};
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> byte(0, 255), id(0, 0x7FF);
  for (int dlc = 0; dlc <= 8; ++dlc) {
    for (int k = 0; k < 50; ++k) {
      std::vector<std::uint8_t> data(static_cast<std::size_t>(dlc));
      for (auto& b : data) b = static_cast<std::uint8_t>(byte(rng));
      const CanFrame f(static_cast<std::uint16_t>(id(rng)), data);
      const RealtimeCheck c = check_realtime(kDefaultIdsCycles, f, t);
      REQUIRE(c.meets);
      REQUIRE(c.slack_cycles >= 8);
    }
  }
}

TEST_CASE("zero and huge latencies") {
  const CanFrame f(0x100, {1});
  const RealtimeCheck zero = check_realtime(0, f, TimingConfig{});
  CHECK(zero.meets);
  CHECK(zero.slack_cycles == reception_window(f, TimingConfig{}).t_window_cycles);
  CHECK_FALSE(check_realtime(1'000'000, f, TimingConfig{}).meets);
  CHECK_THROWS_AS(check_realtime(-1, f, TimingConfig{}), Error);
}

TEST_CASE("timeline of the five byte frame") {
  const TimingConfig t{};
  const FrameTimeline tl = make_timeline(events_of(CanFrame(0x123, {1, 2, 3, 4, 5})), t);
  CHECK(tl.header_detected == 19 * 16);
  REQUIRE(tl.byte_writes.size() == 5);
  CHECK(tl.byte_writes.back() == 64 * 16);
  CHECK(tl.data_en == 64 * 16);
  CHECK(tl.frame_done == (89 + 12) * 16);
  CHECK_FALSE(tl.ids_output_ready.has_value());
}

TEST_CASE("feature layout") {
  const CanFrame prev(0x316, {0x05, 0x21, 0x68});
  const CanFrame cur(0x2A0, {0x64, 0x00, 0x9A, 0x1D, 0x97, 0x02, 0xBD, 0x00});
  const FeatureVector fv = collect_features(cur, &prev);
  const std::array<std::uint8_t, 20> expected = {0x03, 0x16, 0x05, 0x21, 0x68, 0, 0, 0, 0, 0,
                                                 0x02, 0xA0, 0x64, 0x00, 0x9A, 0x1D, 0x97, 0x02, 0xBD, 0x00};
  CHECK(fv.bytes == expected);
  CHECK(fv.valid);

  const FeatureVector first = collect_features(cur, nullptr);
  CHECK_FALSE(first.valid);
  for (std::size_t i = 0; i < 10; ++i) CHECK(first.bytes[i] == 0);
  for (std::size_t i = 10; i < 20; ++i) CHECK(first.bytes[i] == expected[i]);
}
