// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seccan/frame_codec.hpp"

namespace seccan {

enum class Label : std::uint8_t { kBenign = 0, kAttack = 1 };

enum class AttackKind : std::uint8_t { kNone, kDosFlood, kFuzzing, kMalfunction, kFlooding };

const char* to_string(AttackKind kind);
std::optional<AttackKind> parse_attack_kind(const std::string& text);
/// Attack kind from a dataset file name (DoS_dataset.csv, Fuzzy_dataset.csv,
/// gear_dataset.csv, ...). Spoofed gear/RPM traffic maps to malfunction.
AttackKind infer_attack_kind(const std::string& path);

struct TraceRecord {
  std::int64_t timestamp_us = 0;
  CanFrame frame;
  Label label = Label::kBenign;
  /// Attack scenario of the trace the record came from (benign records
  /// included), used to group metrics.
  AttackKind source = AttackKind::kNone;
  /// The preceding record in this list is not the message that preceded it
  /// on the bus.
  bool segment_start = false;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

using Trace = std::vector<TraceRecord>;

enum class TraceSchema { kCarHacking, kSurvival };

const char* to_string(TraceSchema schema);
std::optional<TraceSchema> parse_schema(const std::string& text);

struct LoadStats {
  std::size_t rows = 0;
  std::size_t accepted = 0;
  std::size_t malformed = 0;
  std::size_t reordered = 0;
  /// First few malformed line numbers with reasons.
  std::vector<std::string> problems;
};

/// Parses a labelled trace. Car Hacking rows are
/// `timestamp,id,dlc,b0,...,b{dlc-1},flag`; survival-analysis rows are
/// `timestamp,id,dlc,"b0 b1 ...",flag`. Flag R = benign, T = attack. A
/// non-numeric first row is treated as a header.
/// Throws Error(kIo), Error(kEmptyTrace), or Error(kSchema) when no row of a
/// non-empty file parses under the schema.
Trace load_trace(const std::string& path, TraceSchema schema, AttackKind source = AttackKind::kNone,
                 LoadStats* stats = nullptr);
Trace parse_trace(const std::string& text, TraceSchema schema, AttackKind source = AttackKind::kNone,
                  LoadStats* stats = nullptr);

std::string format_trace(const Trace& trace, TraceSchema schema = TraceSchema::kCarHacking);
void save_trace(const Trace& trace, const std::string& path,
                TraceSchema schema = TraceSchema::kCarHacking);

struct BenignSignal {
  std::uint16_t id = 0;
  std::uint8_t dlc = 8;
  std::int64_t period_us = 10'000;
  std::array<std::uint8_t, 8> base{};
  /// Byte incremented on every transmission (-1: none).
  int counter_byte = -1;
  /// Byte performing a slow bounded random walk (-1: none).
  int signal_byte = -1;
};

struct BenignProfile {
  std::vector<BenignSignal> signals;
  std::int64_t start_us = 1'478'198'376'000'000;
};

/// Periodic ECU traffic loosely shaped after a passenger-car powertrain bus.
BenignProfile default_benign_profile();

struct AttackProfile {
  AttackKind kind = AttackKind::kDosFlood;
  double injection_rate = 0.3;
  /// Legitimate identifier attacked in malfunction mode.
  std::uint16_t target_id = 0x316;
  std::uint64_t seed = 1;

  void validate() const;
};

/// n records of benign traffic with attacks injected per profile. Each
/// record slot is an attack with probability injection_rate.
Trace synthesize(const BenignProfile& benign, const AttackProfile& attack, std::size_t n);

struct SplitRatios {
  double train = 0.75;
  double validation = 0.15;
  double test = 0.10;
};

struct TraceSplit {
  Trace train;
  Trace validation;
  Trace test;
};

/// Contiguous-block split: the trace is cut into blocks, blocks are assigned
/// in shuffled order, and each split keeps the original record order. Sizes
/// are within one record of the exact proportions. Throws
/// Error(kDegenerateSplit) when a split would be empty.
TraceSplit split(const Trace& records, const SplitRatios& ratios, std::uint64_t seed);

/// Appends b to a and marks the join as a segment boundary.
void append_segment(Trace& a, const Trace& b);

}  // namespace seccan
