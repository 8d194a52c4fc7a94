// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "seccan/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "seccan/error.hpp"

namespace seccan {

Metrics metrics_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  const auto d = [](std::uint64_t v) { return static_cast<double>(v); };
  if (tp + fp == 0) {
    m.precision = 100.0;
    m.precision_degenerate = true;
  } else {
    m.precision = 100.0 * d(tp) / d(tp + fp);
  }
  if (tp + fn == 0) {
    m.recall = 100.0;
    m.fnr = 0.0;
    m.recall_degenerate = true;
  } else {
    m.recall = 100.0 * d(tp) / d(tp + fn);
    m.fnr = 100.0 * d(fn) / d(fn + tp);
  }
  const double pr = m.precision + m.recall;
  m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
  const std::uint64_t total = tp + fp + tn + fn;
  m.accuracy = total > 0 ? 100.0 * d(tp + tn) / d(total) : 100.0;
  return m;
}

Metrics compute_metrics(std::span<const Label> labels, std::span<const IdsFlag> verdicts) {
  if (labels.size() != verdicts.size()) {
    throw Error(ErrorCode::kLengthMismatch, "labels and verdicts differ in length");
  }
  if (labels.empty()) throw Error(ErrorCode::kInvalidArgument, "no verdicts to score");
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool attack = labels[i] == Label::kAttack;
    const bool flagged = verdicts[i] == IdsFlag::kAttack;
    tp += attack && flagged;
    fn += attack && !flagged;
    fp += !attack && flagged;
    tn += !attack && !flagged;
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

qnn::Dataset build_dataset(const Trace& trace) {
  qnn::Dataset ds;
  ds.features.reserve(trace.size());
  ds.labels.reserve(trace.size());
  const CanFrame* previous = nullptr;
  for (const TraceRecord& r : trace) {
    if (r.segment_start) previous = nullptr;
    ds.features.push_back(collect_features(r.frame, previous));
    ds.labels.push_back(r.label == Label::kAttack ? 1 : 0);
    previous = &r.frame;
  }
  return ds;
}

namespace {

struct Counts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  void add(bool attack, bool flagged) {
    tp += attack && flagged;
    fn += attack && !flagged;
    fp += !attack && flagged;
    tn += !attack && !flagged;
  }
  Metrics metrics() const { return metrics_from_counts(tp, fp, tn, fn); }
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[256];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

}  // namespace

DetectionReport replay(const Trace& trace, std::shared_ptr<const Detector> detector,
                       const ReplayOptions& options) {
  ControllerConfig cc = options.controller;
  cc.keep_log = false;
  Controller controller(cc, std::move(detector));

  DetectionReport report;
  report.config = options.controller;
  report.total = trace.size();
  report.waveform_record = options.waveform_record;

  Counts overall;
  std::map<AttackKind, Counts> per_attack;
  double slack_sum = 0.0;
  double slack_min = std::numeric_limits<double>::infinity();
  double slack_max = -std::numeric_limits<double>::infinity();
  const TimingConfig& tc = cc.timing;
  const std::int64_t t0 = trace.empty() ? 0 : trace.front().timestamp_us;

  for (std::size_t i = 0; i < trace.size(); ++i) {
    const TraceRecord& rec = trace[i];
    if (i == 0 || rec.segment_start) controller.forget_previous();
    // place the frame at its timestamp when the bus is free by then
    const std::int64_t target_bit = (rec.timestamp_us - t0) * tc.bitrate_bps / 1'000'000;
    if (target_bit > controller.bus_bit()) controller.idle(target_bit - controller.bus_bit());

    const FeedResult fed = controller.feed_bits(encode_frame(rec.frame));
    // events past the end of the stream (frame_done) must not overlap the next frame
    if (!fed.events.empty()) {
      const std::int64_t tail = fed.events.back().bit_index + 1 - controller.bus_bit();
      if (tail > 0) controller.idle(tail);
    }
    if (i == options.waveform_record) report.waveform = waveform_report(fed.events, tc);
    if (!fed.message) {
      ++report.dropped;
      continue;
    }
    ++report.delivered;
    const ReceivedMessage& msg = *fed.message;
    if (msg.ids_skipped) ++report.ids_skipped;
    const bool attack = rec.label == Label::kAttack;
    const bool flagged = msg.ids_flag == IdsFlag::kAttack;
    overall.add(attack, flagged);
    per_attack[rec.source].add(attack, flagged);
    if (attack != flagged) ++report.misclassified;
    if (msg.late) ++report.violations;
    if (msg.timeline.ids_output_ready) {
      const double slack = cycles_to_us(msg.timeline.frame_done - *msg.timeline.ids_output_ready, tc);
      slack_sum += slack;
      slack_min = std::min(slack_min, slack);
      slack_max = std::max(slack_max, slack);
      ++report.latency.samples;
    }
  }
  report.overall = overall.metrics();
  for (const auto& [kind, counts] : per_attack) report.per_attack[kind] = counts.metrics();
  if (report.latency.samples > 0) {
    report.latency.min_slack_us = slack_min;
    report.latency.max_slack_us = slack_max;
    report.latency.mean_slack_us = slack_sum / static_cast<double>(report.latency.samples);
  }
  return report;
}

namespace {

std::string metrics_row(const char* name, const Metrics& m) {
  return fmt("%-12s %8" PRIu64 " %8" PRIu64 " %8" PRIu64 " %8" PRIu64
             " %9.2f%s %7.2f%s %7.2f %7.2f %9.3f\n",
             name, m.tp, m.fp, m.tn, m.fn, m.precision, m.precision_degenerate ? "*" : " ",
             m.recall, m.recall_degenerate ? "*" : " ", m.f1, m.fnr, m.accuracy);
}

void metrics_kv(std::string& out, const std::string& prefix, const Metrics& m) {
  out += fmt("%s.tp=%" PRIu64 "\n", prefix.c_str(), m.tp);
  out += fmt("%s.fp=%" PRIu64 "\n", prefix.c_str(), m.fp);
  out += fmt("%s.tn=%" PRIu64 "\n", prefix.c_str(), m.tn);
  out += fmt("%s.fn=%" PRIu64 "\n", prefix.c_str(), m.fn);
  out += fmt("%s.precision=%.6f\n", prefix.c_str(), m.precision);
  out += fmt("%s.recall=%.6f\n", prefix.c_str(), m.recall);
  out += fmt("%s.f1=%.6f\n", prefix.c_str(), m.f1);
  out += fmt("%s.fnr=%.6f\n", prefix.c_str(), m.fnr);
  out += fmt("%s.accuracy=%.6f\n", prefix.c_str(), m.accuracy);
  out += fmt("%s.precision_degenerate=%d\n", prefix.c_str(), m.precision_degenerate ? 1 : 0);
  out += fmt("%s.recall_degenerate=%d\n", prefix.c_str(), m.recall_degenerate ? 1 : 0);
}

}  // namespace

std::string format_report_text(const DetectionReport& r) {
  const TimingConfig& t = r.config.timing;
  std::string out = "detection report\n";
  out += fmt("frames      total=%zu delivered=%zu dropped=%zu ids_skipped=%zu\n", r.total,
             r.delivered, r.dropped, r.ids_skipped);
  out += fmt("config      bitrate=%" PRId64 " bps clock=%" PRId64 " Hz ids_latency=%" PRId64
             " cycles (%.4f us) frame_done=%s\n",
             t.bitrate_bps, t.controller_clock_hz, r.config.ids_latency_cycles,
             cycles_to_us(r.config.ids_latency_cycles, t), to_string(t.frame_done));
  out += fmt("%-12s %8s %8s %8s %8s %10s %8s %7s %7s %9s\n", "scope", "tp", "fp", "tn", "fn",
             "precision", "recall", "f1", "fnr", "accuracy");
  out += metrics_row("overall", r.overall);
  for (const auto& [kind, m] : r.per_attack) out += metrics_row(to_string(kind), m);
  out += "(* = zero denominator, conventional value)\n";
  out += fmt("misclassified %zu of %zu\n", r.misclassified, r.delivered);
  if (r.latency.samples > 0) {
    out += fmt("ids slack   min=%.4f us mean=%.4f us max=%.4f us over %zu frames\n",
               r.latency.min_slack_us, r.latency.mean_slack_us, r.latency.max_slack_us,
               r.latency.samples);
  }
  out += fmt("realtime violations %zu\n", r.violations);
  if (!r.waveform.empty()) {
    out += fmt("\nwaveform of record %zu\n", r.waveform_record);
    out += r.waveform;
  }
  return out;
}

std::string format_report_kv(const DetectionReport& r) {
  const TimingConfig& t = r.config.timing;
  std::string out;
  out += fmt("frames.total=%zu\n", r.total);
  out += fmt("frames.delivered=%zu\n", r.delivered);
  out += fmt("frames.dropped=%zu\n", r.dropped);
  out += fmt("frames.ids_skipped=%zu\n", r.ids_skipped);
  out += fmt("config.bitrate_bps=%" PRId64 "\n", t.bitrate_bps);
  out += fmt("config.controller_clock_hz=%" PRId64 "\n", t.controller_clock_hz);
  out += fmt("config.ids_latency_cycles=%" PRId64 "\n", r.config.ids_latency_cycles);
  out += fmt("config.frame_done=%s\n", to_string(t.frame_done));
  metrics_kv(out, "metrics.overall", r.overall);
  for (const auto& [kind, m] : r.per_attack) metrics_kv(out, std::string("metrics.") + to_string(kind), m);
  out += fmt("misclassified=%zu\n", r.misclassified);
  out += fmt("latency.samples=%zu\n", r.latency.samples);
  out += fmt("latency.slack_min_us=%.6f\n", r.latency.min_slack_us);
  out += fmt("latency.slack_mean_us=%.6f\n", r.latency.mean_slack_us);
  out += fmt("latency.slack_max_us=%.6f\n", r.latency.max_slack_us);
  out += fmt("realtime.violations=%zu\n", r.violations);
  return out;
}

std::string waveform_report(std::span<const ControllerEvent> events, const TimingConfig& cfg) {
  if (events.empty()) return {};
  const std::int64_t origin = events.front().sof_bit;
  std::int64_t last = 0;
  for (const ControllerEvent& e : events) last = std::max(last, e.bit_index - origin);
  const auto width = static_cast<std::size_t>(last + 2);

  struct Row {
    const char* name;
    std::string cells;
  };
  std::vector<Row> rows = {{"header_detector", {}}, {"ids_en", {}},           {"write_flag", {}},
                           {"data_en", {}},         {"ids_output_ready", {}}, {"frame_done", {}}};
  for (Row& r : rows) r.cells.assign(width, '.');
  auto col = [&](const ControllerEvent& e) { return static_cast<std::size_t>(e.bit_index - origin); };
  auto fill = [&](std::string& cells, std::size_t from, std::size_t to) {
    for (std::size_t c = from; c <= to && c < cells.size(); ++c) cells[c] = '#';
  };

  std::optional<std::size_t> ids_en, data_en, ready, done;
  for (const ControllerEvent& e : events) {
    switch (e.kind) {
      case EventKind::kHeaderDetected: rows[0].cells[col(e)] = '#'; break;
      case EventKind::kIdsEnabled: ids_en = col(e); break;
      case EventKind::kByteWritten: rows[2].cells[col(e)] = '#'; break;
      case EventKind::kDataEnAsserted: data_en = col(e); break;
      case EventKind::kIdsOutputReady: ready = col(e); rows[4].cells[col(e)] = '#'; break;
      case EventKind::kFrameDone:
      case EventKind::kFrameDropped: done = col(e); rows[5].cells[col(e)] = '#'; break;
      default: break;
    }
  }
  // ids_en holds until the frame completes; data_en until the verdict.
  if (ids_en) fill(rows[1].cells, *ids_en, done.value_or(width - 1));
  if (data_en) fill(rows[3].cells, *data_en, ready ? *ready - 1 : *data_en);

  std::string out = fmt("sof_bit=%" PRId64 "  one column per bit time (%.4f us)\n", origin,
                        bit_index_to_time_us(1, cfg));
  std::string ruler(width, ' ');
  std::string ticks(width, ' ');
  for (std::size_t c = 0; c < width; c += 10) {
    const std::string label = std::to_string(c);
    for (std::size_t k = 0; k < label.size() && c + k < width; ++k) ruler[c + k] = label[k];
    ticks[c] = '|';
  }
  ruler.erase(ruler.find_last_not_of(' ') + 1);
  ticks.erase(ticks.find_last_not_of(' ') + 1);
  out += fmt("%-17s %s\n", "bit", ruler.c_str());
  out += fmt("%-17s %s\n", "", ticks.c_str());
  for (const Row& r : rows) out += fmt("%-17s %s\n", r.name, r.cells.c_str());
  out += "events\n";
  for (const ControllerEvent& e : events) {
    out += "  ";
    out += format_event(e, cfg);
    out += '\n';
  }
  return out;
}

std::vector<TimingRow> timing_table(const ControllerConfig& cfg) {
  cfg.validate();
  std::vector<TimingRow> rows;
  for (int dlc = 0; dlc <= 8; ++dlc) {
    for (const char* kind : {"zeros", "ones", "worst"}) {
      std::array<std::uint8_t, 8> data{};
      std::uint16_t id = 0x7FF;
      if (std::string(kind) == "ones") data.fill(0xFF);
      if (std::string(kind) == "worst") {
        // pick the payload with the most stuff bits after data_en
        std::int64_t best = -1;
        for (int fill = 0; fill < 256; ++fill) {
          std::array<std::uint8_t, 8> candidate{};
          candidate.fill(static_cast<std::uint8_t>(fill));
          const CanFrame f(0x7FF, std::span<const std::uint8_t>(candidate.data(), static_cast<std::size_t>(dlc)));
          const auto d = decode_frame(encode_frame(f));
          const std::int64_t tail = static_cast<std::int64_t>(d.decoded->events.crc_done) - data_en_bits(d.decoded->events);
          if (tail > best) {
            best = tail;
            data = candidate;
          }
        }
      }
      const CanFrame frame(id, std::span<const std::uint8_t>(data.data(), static_cast<std::size_t>(dlc)));
      const BitStream bits = encode_frame(frame);
      const DecodeEvents ev = decode_frame(bits).decoded->events;
      TimingRow row;
      row.dlc = dlc;
      row.payload = kind;
      row.stuff_bits = static_cast<std::int64_t>(bits.stuffed_region_end) - (34 + 8 * dlc);
      TimingConfig t = cfg.timing;
      t.frame_done = FrameDoneConvention::kEndOfEof;
      row.window_eof_cycles = reception_window(ev, t).t_window_cycles;
      t.frame_done = FrameDoneConvention::kEndOfIfs;
      row.window_ifs_cycles = reception_window(ev, t).t_window_cycles;
      t.frame_done = FrameDoneConvention::kEndOfErrorFlags;
      row.window_eflag_cycles = reception_window(ev, t).t_window_cycles;
      const ReceptionWindow w = reception_window(ev, cfg.timing);
      row.t_max_cycles = w.t_max_cycles;
      row.meets = cfg.ids_latency_cycles <= w.t_window_cycles;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string format_timing_table(const ControllerConfig& cfg) {
  const auto rows = timing_table(cfg);
  const TimingConfig& t = cfg.timing;
  std::string out = fmt("bitrate=%" PRId64 " bps clock=%" PRId64 " Hz ids_latency=%" PRId64
                        " cycles (%.4f us) frame_done=%s\n",
                        t.bitrate_bps, t.controller_clock_hz, cfg.ids_latency_cycles,
                        cycles_to_us(cfg.ids_latency_cycles, t), to_string(t.frame_done));
  out += "reference: 37.376 us measured window at 1 Mbps\n";
  out += fmt("%-4s %-6s %6s %12s %12s %12s %12s %8s\n", "dlc", "data", "stuff", "win_eof_us",
             "win_ifs_us", "win_eflag_us", "t_max_us", "meets");
  std::size_t violations = 0;
  for (const TimingRow& r : rows) {
    out += fmt("%-4d %-6s %6" PRId64 " %12.4f %12.4f %12.4f %12.4f %8s\n", r.dlc, r.payload.c_str(),
               r.stuff_bits, cycles_to_us(r.window_eof_cycles, t), cycles_to_us(r.window_ifs_cycles, t),
               cycles_to_us(r.window_eflag_cycles, t), cycles_to_us(r.t_max_cycles, t),
               r.meets ? "yes" : "NO");
    violations += !r.meets;
  }
  out += fmt("violations under %s: %zu of %zu\n", to_string(t.frame_done), violations, rows.size());
  return out;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    char* end = nullptr;
    out = static_cast<T>(std::strtod(value.c_str(), &end));
    if (value.empty() || *end != '\0') throw Error(ErrorCode::kConfig, "bad number for " + key + ": " + value);
  } else {
    const auto r = std::from_chars(value.data(), value.data() + value.size(), out);
    if (r.ec != std::errc() || r.ptr != value.data() + value.size()) {
      throw Error(ErrorCode::kConfig, "bad integer for " + key + ": " + value);
    }
  }
  return out;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig parse_run_config(const std::string& text, RunConfig cfg) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfig, "line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key == "bitrate") {
      cfg.controller.timing.bitrate_bps = parse_number<std::int64_t>(key, value);
    } else if (key == "clock-mhz") {
      cfg.controller.timing.controller_clock_hz =
          std::llround(parse_number<double>(key, value) * 1e6);
    } else if (key == "ids-cycles") {
      cfg.controller.ids_latency_cycles = parse_number<std::int64_t>(key, value);
    } else if (key == "frame-done") {
      const auto c = parse_convention(value);
      if (!c) throw Error(ErrorCode::kConfig, "unknown frame-done convention " + value);
      cfg.controller.timing.frame_done = *c;
    } else if (key == "schema") {
      const auto s = parse_schema(value);
      if (!s) throw Error(ErrorCode::kConfig, "unknown schema " + value);
      cfg.schema = *s;
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(key, value);
      cfg.train.seed = cfg.seed;
    } else if (key == "epochs") {
      cfg.train.epochs = parse_number<int>(key, value);
    } else if (key == "learning-rate") {
      cfg.train.learning_rate = parse_number<double>(key, value);
    } else if (key == "batch-size") {
      cfg.train.batch_size = parse_number<int>(key, value);
    } else if (key == "dropout") {
      cfg.train.dropout_rate = parse_number<double>(key, value);
    } else if (key == "patience") {
      cfg.train.patience = parse_number<int>(key, value);
    } else if (key == "finetune-epochs") {
      cfg.train.finetune_epochs = parse_number<int>(key, value);
    } else {
      throw Error(ErrorCode::kConfig, "unknown configuration key " + key);
    }
  }
  cfg.controller.validate();
  cfg.train.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), std::move(base));
}

}  // namespace seccan
