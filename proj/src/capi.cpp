// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "seccan/seccan.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "seccan/controller.hpp"
#include "seccan/error.hpp"
#include "seccan/harness.hpp"
#include "seccan/traffic.hpp"
#include "seccan/train.hpp"
#include "seccan/weights_io.hpp"

struct seccan_trace {
  seccan::Trace records;
};

struct seccan_model {
  seccan::qnn::QuantizedMlp mlp = seccan::qnn::QuantizedMlp::zeros();
  std::vector<seccan::qnn::EpochLog> log;
};

struct seccan_report {
  seccan::DetectionReport report;
};

namespace {

thread_local std::string g_last_error;

seccan_status to_status(seccan::ErrorCode code) {
  using seccan::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return SECCAN_ERR_INVALID_ARGUMENT;
    case ErrorCode::kInvalidFrame: return SECCAN_ERR_INVALID_FRAME;
    case ErrorCode::kConfig: return SECCAN_ERR_CONFIG;
    case ErrorCode::kIo: return SECCAN_ERR_IO;
    case ErrorCode::kSchema: return SECCAN_ERR_SCHEMA;
    case ErrorCode::kEmptyTrace: return SECCAN_ERR_EMPTY_TRACE;
    case ErrorCode::kDegenerateSplit: return SECCAN_ERR_DEGENERATE_SPLIT;
    case ErrorCode::kDegenerateData: return SECCAN_ERR_DEGENERATE_DATA;
    case ErrorCode::kNonFinite: return SECCAN_ERR_NON_FINITE;
    case ErrorCode::kZeroVariance: return SECCAN_ERR_ZERO_VARIANCE;
    case ErrorCode::kVersionMismatch: return SECCAN_ERR_VERSION_MISMATCH;
    case ErrorCode::kChecksumMismatch: return SECCAN_ERR_CHECKSUM_MISMATCH;
    case ErrorCode::kDimensionMismatch: return SECCAN_ERR_DIMENSION_MISMATCH;
    case ErrorCode::kLengthMismatch: return SECCAN_ERR_LENGTH_MISMATCH;
  }
  return SECCAN_ERR_INTERNAL;
}

seccan_status fail(seccan_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
seccan_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const seccan::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SECCAN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SECCAN_ERR_INTERNAL, e.what());
  }
}

#define SECCAN_REQUIRE(cond)                                 \
  do {                                                       \
    if (!(cond)) return fail(SECCAN_ERR_INVALID_ARGUMENT, "null or invalid argument: " #cond); \
  } while (0)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

seccan::ControllerConfig controller_config(const seccan_timing* t) {
  seccan::ControllerConfig cfg;
  if (t != nullptr) {
    cfg.timing.bitrate_bps = t->bitrate_bps;
    cfg.timing.controller_clock_hz = t->controller_clock_hz;
    cfg.timing.frame_done = static_cast<seccan::FrameDoneConvention>(t->frame_done);
    cfg.ids_latency_cycles = t->ids_latency_cycles;
  }
  cfg.validate();
  return cfg;
}

seccan_timing to_c(const seccan::ControllerConfig& cfg) {
  return {cfg.timing.bitrate_bps, cfg.timing.controller_clock_hz, cfg.ids_latency_cycles,
          static_cast<seccan_frame_done>(cfg.timing.frame_done)};
}

seccan::qnn::TrainConfig train_config(const seccan_train_config& c) {
  seccan::qnn::TrainConfig cfg;
  cfg.epochs = c.epochs;
  cfg.learning_rate = c.learning_rate;
  cfg.batch_size = c.batch_size;
  cfg.dropout_rate = c.dropout_rate;
  cfg.seed = c.seed;
  cfg.patience = c.patience;
  cfg.finetune_epochs = c.finetune_epochs;
  return cfg;
}

seccan_train_config to_c(const seccan::qnn::TrainConfig& cfg) {
  return {cfg.epochs, cfg.learning_rate, cfg.batch_size, cfg.dropout_rate,
          cfg.seed,   cfg.patience,      cfg.finetune_epochs};
}

seccan::RunConfig from_c(const seccan_run_config& c) {
  seccan::RunConfig cfg;
  cfg.controller = controller_config(&c.timing);
  cfg.train = train_config(c.train);
  cfg.schema = static_cast<seccan::TraceSchema>(c.schema);
  cfg.seed = c.seed;
  return cfg;
}

seccan_run_config to_c(const seccan::RunConfig& cfg) {
  return {to_c(cfg.controller), to_c(cfg.train), static_cast<seccan_schema>(cfg.schema), cfg.seed};
}

seccan::CanFrame frame_from_c(const seccan_frame& f) {
  if (f.dlc > 8) throw seccan::Error(seccan::ErrorCode::kInvalidFrame, "dlc above 8");
  return seccan::CanFrame(f.id, std::span<const std::uint8_t>(f.data, f.dlc));
}

void metrics_to_c(const seccan::Metrics& m, seccan_metrics* out) {
  out->tp = m.tp;
  out->fp = m.fp;
  out->tn = m.tn;
  out->fn = m.fn;
  out->precision = m.precision;
  out->recall = m.recall;
  out->f1 = m.f1;
  out->accuracy = m.accuracy;
  out->fnr = m.fnr;
  out->precision_degenerate = m.precision_degenerate;
  out->recall_degenerate = m.recall_degenerate;
}

}  // namespace

extern "C" {

const char* seccan_last_error(void) { return g_last_error.c_str(); }

const char* seccan_status_name(seccan_status status) {
  switch (status) {
    case SECCAN_OK: return "Ok";
    case SECCAN_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case SECCAN_ERR_INVALID_FRAME: return "InvalidFrame";
    case SECCAN_ERR_CONFIG: return "ConfigError";
    case SECCAN_ERR_IO: return "IoError";
    case SECCAN_ERR_SCHEMA: return "SchemaError";
    case SECCAN_ERR_EMPTY_TRACE: return "EmptyTrace";
    case SECCAN_ERR_DEGENERATE_SPLIT: return "DegenerateSplit";
    case SECCAN_ERR_DEGENERATE_DATA: return "DegenerateData";
    case SECCAN_ERR_NON_FINITE: return "NonFinite";
    case SECCAN_ERR_ZERO_VARIANCE: return "ZeroVariance";
    case SECCAN_ERR_VERSION_MISMATCH: return "VersionMismatch";
    case SECCAN_ERR_CHECKSUM_MISMATCH: return "ChecksumMismatch";
    case SECCAN_ERR_DIMENSION_MISMATCH: return "DimensionMismatch";
    case SECCAN_ERR_LENGTH_MISMATCH: return "LengthMismatch";
    case SECCAN_ERR_INTERNAL: return "Internal";
  }
  return "Unknown";
}

void seccan_string_free(char* s) { std::free(s); }

void seccan_run_config_default(seccan_run_config* out) {
  if (out != nullptr) *out = to_c(seccan::RunConfig{});
}

seccan_status seccan_run_config_load(const char* path, seccan_run_config* cfg) {
  SECCAN_REQUIRE(path != nullptr && cfg != nullptr);
  return guarded([&] {
    *cfg = to_c(seccan::load_run_config(path, from_c(*cfg)));
    return SECCAN_OK;
  });
}

seccan_status seccan_parse_frame_done(const char* text, seccan_frame_done* out) {
  SECCAN_REQUIRE(text != nullptr && out != nullptr);
  const auto c = seccan::parse_convention(text);
  if (!c) return fail(SECCAN_ERR_CONFIG, std::string("unknown frame_done convention: ") + text);
  *out = static_cast<seccan_frame_done>(*c);
  return SECCAN_OK;
}

seccan_status seccan_parse_schema(const char* text, seccan_schema* out) {
  SECCAN_REQUIRE(text != nullptr && out != nullptr);
  const auto s = seccan::parse_schema(text);
  if (!s) return fail(SECCAN_ERR_CONFIG, std::string("unknown schema: ") + text);
  *out = static_cast<seccan_schema>(*s);
  return SECCAN_OK;
}

seccan_status seccan_parse_attack(const char* text, seccan_attack* out) {
  SECCAN_REQUIRE(text != nullptr && out != nullptr);
  const auto k = seccan::parse_attack_kind(text);
  if (!k) return fail(SECCAN_ERR_CONFIG, std::string("unknown attack kind: ") + text);
  *out = static_cast<seccan_attack>(*k);
  return SECCAN_OK;
}

seccan_attack seccan_infer_attack(const char* path) {
  if (path == nullptr) return SECCAN_ATTACK_NONE;
  return static_cast<seccan_attack>(seccan::infer_attack_kind(path));
}

const char* seccan_attack_name(seccan_attack kind) {
  return seccan::to_string(static_cast<seccan::AttackKind>(kind));
}

seccan_status seccan_trace_load(const char* path, seccan_schema schema, seccan_attack source,
                                seccan_trace** out, size_t* malformed_rows) {
  SECCAN_REQUIRE(path != nullptr && out != nullptr);
  return guarded([&] {
    seccan::LoadStats stats;
    auto t = std::make_unique<seccan_trace>();
    t->records = seccan::load_trace(path, static_cast<seccan::TraceSchema>(schema),
                                    static_cast<seccan::AttackKind>(source), &stats);
    if (malformed_rows != nullptr) *malformed_rows = stats.malformed;
    *out = t.release();
    return SECCAN_OK;
  });
}

seccan_status seccan_trace_synthesize(seccan_attack kind, double injection_rate, uint64_t seed, size_t n,
                                      seccan_trace** out) {
  SECCAN_REQUIRE(out != nullptr);
  return guarded([&] {
    seccan::AttackProfile attack;
    attack.kind = static_cast<seccan::AttackKind>(kind);
    attack.injection_rate = injection_rate;
    attack.seed = seed;
    auto t = std::make_unique<seccan_trace>();
    t->records = seccan::synthesize(seccan::default_benign_profile(), attack, n);
    *out = t.release();
    return SECCAN_OK;
  });
}

seccan_status seccan_trace_save(const seccan_trace* trace, const char* path, seccan_schema schema) {
  SECCAN_REQUIRE(trace != nullptr && path != nullptr);
  return guarded([&] {
    seccan::save_trace(trace->records, path, static_cast<seccan::TraceSchema>(schema));
    return SECCAN_OK;
  });
}

seccan_trace* seccan_trace_new(void) { return new (std::nothrow) seccan_trace; }

size_t seccan_trace_size(const seccan_trace* trace) { return trace ? trace->records.size() : 0; }

size_t seccan_trace_attack_count(const seccan_trace* trace) {
  if (trace == nullptr) return 0;
  size_t n = 0;
  for (const auto& r : trace->records) n += r.label == seccan::Label::kAttack;
  return n;
}

seccan_status seccan_trace_append(seccan_trace* dst, const seccan_trace* src) {
  SECCAN_REQUIRE(dst != nullptr && src != nullptr);
  return guarded([&] {
    seccan::append_segment(dst->records, src->records);
    return SECCAN_OK;
  });
}

seccan_status seccan_trace_split(const seccan_trace* trace, double train, double validation, double test,
                                 uint64_t seed, seccan_trace** train_out, seccan_trace** validation_out,
                                 seccan_trace** test_out) {
  SECCAN_REQUIRE(trace != nullptr && train_out != nullptr && validation_out != nullptr &&
                 test_out != nullptr);
  return guarded([&] {
    seccan::TraceSplit s = seccan::split(trace->records, seccan::SplitRatios{train, validation, test}, seed);
    auto a = std::make_unique<seccan_trace>();
    auto b = std::make_unique<seccan_trace>();
    auto c = std::make_unique<seccan_trace>();
    a->records = std::move(s.train);
    b->records = std::move(s.validation);
    c->records = std::move(s.test);
    *train_out = a.release();
    *validation_out = b.release();
    *test_out = c.release();
    return SECCAN_OK;
  });
}

void seccan_trace_free(seccan_trace* trace) { delete trace; }

seccan_status seccan_model_train(const seccan_trace* train, const seccan_trace* validation,
                                 const seccan_train_config* cfg, seccan_model** out) {
  SECCAN_REQUIRE(train != nullptr && cfg != nullptr && out != nullptr);
  return guarded([&] {
    const seccan::qnn::Dataset train_set = seccan::build_dataset(train->records);
    seccan::qnn::Dataset val_set;
    if (validation != nullptr) val_set = seccan::build_dataset(validation->records);
    seccan::qnn::TrainResult r =
        seccan::qnn::train(train_set, validation ? &val_set : nullptr, train_config(*cfg));
    auto m = std::make_unique<seccan_model>();
    m->mlp = std::move(r.model);
    m->log = std::move(r.log);
    *out = m.release();
    return SECCAN_OK;
  });
}

seccan_status seccan_model_load(const char* path, seccan_model** out) {
  SECCAN_REQUIRE(path != nullptr && out != nullptr);
  return guarded([&] {
    auto m = std::make_unique<seccan_model>();
    m->mlp = seccan::qnn::load_weights(path);
    *out = m.release();
    return SECCAN_OK;
  });
}

seccan_status seccan_model_save(const seccan_model* model, const char* path) {
  SECCAN_REQUIRE(model != nullptr && path != nullptr);
  return guarded([&] {
    seccan::qnn::save_weights(model->mlp, path);
    return SECCAN_OK;
  });
}

size_t seccan_model_epoch_count(const seccan_model* model) { return model ? model->log.size() : 0; }

seccan_status seccan_model_epoch(const seccan_model* model, size_t index, seccan_epoch* out) {
  SECCAN_REQUIRE(model != nullptr && out != nullptr && index < model->log.size());
  const auto& e = model->log[index];
  *out = {e.epoch, e.phase == "finetune", e.train_loss, e.val_loss, e.val_accuracy};
  return SECCAN_OK;
}

seccan_status seccan_model_classify(const seccan_model* model, const seccan_frame* current,
                                    const seccan_frame* previous, int* is_attack, double* probability) {
  SECCAN_REQUIRE(model != nullptr && current != nullptr);
  return guarded([&] {
    const seccan::CanFrame cur = frame_from_c(*current);
    std::optional<seccan::CanFrame> prev;
    if (previous != nullptr) prev = frame_from_c(*previous);
    const seccan::FeatureVector fv = seccan::collect_features(cur, prev ? &*prev : nullptr);
    if (is_attack != nullptr) *is_attack = model->mlp.is_attack(fv);
    if (probability != nullptr) *probability = model->mlp.probability(fv);
    return SECCAN_OK;
  });
}

void seccan_model_free(seccan_model* model) { delete model; }

seccan_status seccan_replay(const seccan_trace* trace, const seccan_model* model, const seccan_timing* timing,
                            seccan_report** out) {
  SECCAN_REQUIRE(trace != nullptr && out != nullptr);
  return guarded([&] {
    if (trace->records.empty()) throw seccan::Error(seccan::ErrorCode::kEmptyTrace, "trace has no records");
    seccan::ReplayOptions options;
    options.controller = controller_config(timing);
    std::shared_ptr<const seccan::Detector> detector;
    if (model != nullptr) detector = std::make_shared<seccan::QnnDetector>(model->mlp);
    auto r = std::make_unique<seccan_report>();
    r->report = seccan::replay(trace->records, detector, options);
    *out = r.release();
    return SECCAN_OK;
  });
}

void seccan_report_overall(const seccan_report* report, seccan_metrics* out) {
  if (report != nullptr && out != nullptr) metrics_to_c(report->report.overall, out);
}

seccan_status seccan_report_attack(const seccan_report* report, seccan_attack kind, seccan_metrics* out) {
  SECCAN_REQUIRE(report != nullptr && out != nullptr);
  const auto it = report->report.per_attack.find(static_cast<seccan::AttackKind>(kind));
  if (it == report->report.per_attack.end()) {
    return fail(SECCAN_ERR_INVALID_ARGUMENT, "no records from that source");
  }
  metrics_to_c(it->second, out);
  return SECCAN_OK;
}

size_t seccan_report_violations(const seccan_report* report) {
  return report ? report->report.violations : 0;
}

seccan_status seccan_report_text(const seccan_report* report, char** out) {
  SECCAN_REQUIRE(report != nullptr && out != nullptr);
  return guarded([&] {
    *out = dup_string(seccan::format_report_text(report->report));
    return SECCAN_OK;
  });
}

seccan_status seccan_report_kv(const seccan_report* report, char** out) {
  SECCAN_REQUIRE(report != nullptr && out != nullptr);
  return guarded([&] {
    *out = dup_string(seccan::format_report_kv(report->report));
    return SECCAN_OK;
  });
}

void seccan_report_free(seccan_report* report) { delete report; }

seccan_status seccan_simulate_frame(const seccan_frame* frame, const seccan_frame* previous,
                                    const seccan_model* model, const seccan_timing* timing, char** waveform,
                                    char** event_log) {
  SECCAN_REQUIRE(frame != nullptr);
  return guarded([&] {
    const seccan::ControllerConfig cfg = controller_config(timing);
    std::shared_ptr<const seccan::Detector> detector;
    if (model != nullptr) detector = std::make_shared<seccan::QnnDetector>(model->mlp);
    seccan::Controller controller(cfg, detector);
    if (previous != nullptr) {
      const auto fed = controller.feed_bits(seccan::encode_frame(frame_from_c(*previous)));
      const std::int64_t tail = fed.events.back().bit_index + 1 - controller.bus_bit();
      if (tail > 0) controller.idle(tail);
    }
    const auto fed = controller.feed_bits(seccan::encode_frame(frame_from_c(*frame)));
    if (waveform != nullptr) *waveform = dup_string(seccan::waveform_report(fed.events, cfg.timing));
    if (event_log != nullptr) *event_log = dup_string(controller.event_log_text());
    return SECCAN_OK;
  });
}

seccan_status seccan_reception_window(const seccan_frame* frame, const seccan_timing* timing,
                                      seccan_window* out) {
  SECCAN_REQUIRE(frame != nullptr && out != nullptr);
  return guarded([&] {
    const seccan::ControllerConfig cfg = controller_config(timing);
    const seccan::CanFrame f = frame_from_c(*frame);
    const seccan::ReceptionWindow w = seccan::reception_window(f, cfg.timing);
    const seccan::RealtimeCheck c = seccan::check_realtime(cfg.ids_latency_cycles, f, cfg.timing);
    *out = {w.t_max_cycles, w.t_window_cycles, w.t_max_us, w.t_window_us, c.meets, c.slack_cycles};
    return SECCAN_OK;
  });
}

seccan_status seccan_timing_table(const seccan_timing* timing, char** out, size_t* violations) {
  SECCAN_REQUIRE(out != nullptr);
  return guarded([&] {
    const seccan::ControllerConfig cfg = controller_config(timing);
    if (violations != nullptr) {
      *violations = 0;
      for (const auto& row : seccan::timing_table(cfg)) *violations += !row.meets;
    }
    *out = dup_string(seccan::format_timing_table(cfg));
    return SECCAN_OK;
  });
}

}  // extern "C"
