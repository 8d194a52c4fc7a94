// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seccan/controller.hpp"
#include "seccan/traffic.hpp"
#include "seccan/train.hpp"

namespace seccan {

/// Confusion counts and derived percentages; attack is the positive class.
struct Metrics {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0, accuracy = 0, fnr = 0;
  /// Set when the named ratio had a zero denominator and took its
  /// conventional value (precision/recall/F1 100%, FNR 0%).
  bool precision_degenerate = false;
  bool recall_degenerate = false;

  std::uint64_t total() const noexcept { return tp + fp + tn + fn; }
};

Metrics metrics_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn);

/// Throws Error(kLengthMismatch) for unequal lengths, Error(kInvalidArgument)
/// when empty.
Metrics compute_metrics(std::span<const Label> labels, std::span<const IdsFlag> verdicts);

/// Features and labels of a trace, with the previous-message slot reset at
/// every segment start, exactly as the controller sees them.
qnn::Dataset build_dataset(const Trace& trace);

struct LatencyStats {
  std::size_t samples = 0;
  double min_slack_us = 0, mean_slack_us = 0, max_slack_us = 0;
};

struct DetectionReport {
  Metrics overall;
  std::map<AttackKind, Metrics> per_attack;
  LatencyStats latency;
  std::size_t violations = 0;
  std::size_t misclassified = 0;
  std::size_t total = 0, delivered = 0, dropped = 0, ids_skipped = 0;
  ControllerConfig config;
  std::size_t waveform_record = 0;
  std::string waveform;
};

struct ReplayOptions {
  ControllerConfig controller;
  /// Record whose events are rendered into the report.
  std::size_t waveform_record = 0;
};

/// Encodes every record to bus bits, feeds the controller in timestamp order
/// and scores its verdicts against the labels.
DetectionReport replay(const Trace& trace, std::shared_ptr<const Detector> detector,
                       const ReplayOptions& options);

std::string format_report_text(const DetectionReport& report);
/// key=value lines; see README for the schema.
std::string format_report_kv(const DetectionReport& report);

/// ASCII signal timeline of one frame's events, one column per bit time.
std::string waveform_report(std::span<const ControllerEvent> events, const TimingConfig& cfg);

/// Windows per DLC for all frame_done conventions, with the real-time check.
struct TimingRow {
  int dlc = 0;
  std::string payload;  // "zeros", "ones", "worst"
  std::int64_t stuff_bits = 0;
  std::int64_t window_eof_cycles = 0, window_ifs_cycles = 0, window_eflag_cycles = 0;
  std::int64_t t_max_cycles = 0;  // under the configured convention
  bool meets = false;             // under the configured convention
};

std::vector<TimingRow> timing_table(const ControllerConfig& cfg);
std::string format_timing_table(const ControllerConfig& cfg);

/// Flat key=value run configuration; every CLI flag has a key of the same
/// name. Unknown keys are a ConfigError.
struct RunConfig {
  ControllerConfig controller;
  qnn::TrainConfig train;
  TraceSchema schema = TraceSchema::kCarHacking;
  std::uint64_t seed = 1;
};

RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::string& path, RunConfig base = {});

}  // namespace seccan
