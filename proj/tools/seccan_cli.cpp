// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the simulator only through the C API.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seccan/seccan.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kDataError = 2, kThresholdFailure = 3 };

struct TraceDeleter {
  void operator()(seccan_trace* t) const { seccan_trace_free(t); }
};
struct ModelDeleter {
  void operator()(seccan_model* m) const { seccan_model_free(m); }
};
struct ReportDeleter {
  void operator()(seccan_report* r) const { seccan_report_free(r); }
};
struct StringDeleter {
  void operator()(char* s) const { seccan_string_free(s); }
};
using TracePtr = std::unique_ptr<seccan_trace, TraceDeleter>;
using ModelPtr = std::unique_ptr<seccan_model, ModelDeleter>;
using ReportPtr = std::unique_ptr<seccan_report, ReportDeleter>;
using CString = std::unique_ptr<char, StringDeleter>;

// A failed C call; carries the exit code to use.
struct CliFailure {
  int exit_code;
  std::string message;
};

void check(seccan_status s, const std::string& what) {
  if (s == SECCAN_OK) return;
  const int code = (s == SECCAN_ERR_CONFIG || s == SECCAN_ERR_INVALID_ARGUMENT) ? kUsage : kDataError;
  throw CliFailure{code, what + ": " + seccan_status_name(s) + ": " + seccan_last_error()};
}

struct GlobalFlags {
  std::string config_path;
  std::optional<long long> bitrate;
  std::optional<double> clock_mhz;
  std::optional<long long> ids_cycles;
  std::optional<std::string> schema;
  std::optional<std::string> frame_done;
  std::optional<unsigned long long> seed;
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::optional<int> batch_size;
  std::optional<double> dropout;
  std::optional<int> patience;
  std::optional<int> finetune_epochs;
};

// Defaults, then the config file, then explicit flags.
seccan_run_config resolve(const GlobalFlags& f) {
  seccan_run_config cfg;
  seccan_run_config_default(&cfg);
  if (!f.config_path.empty()) check(seccan_run_config_load(f.config_path.c_str(), &cfg), "config");
  if (f.bitrate) cfg.timing.bitrate_bps = *f.bitrate;
  if (f.clock_mhz) cfg.timing.controller_clock_hz = std::llround(*f.clock_mhz * 1e6);
  if (f.ids_cycles) cfg.timing.ids_latency_cycles = *f.ids_cycles;
  if (f.schema) check(seccan_parse_schema(f.schema->c_str(), &cfg.schema), "--schema");
  if (f.frame_done) check(seccan_parse_frame_done(f.frame_done->c_str(), &cfg.timing.frame_done), "--frame-done");
  if (f.seed) {
    cfg.seed = *f.seed;
    cfg.train.seed = *f.seed;
  }
  if (f.epochs) cfg.train.epochs = *f.epochs;
  if (f.learning_rate) cfg.train.learning_rate = *f.learning_rate;
  if (f.batch_size) cfg.train.batch_size = *f.batch_size;
  if (f.dropout) cfg.train.dropout_rate = *f.dropout;
  if (f.patience) cfg.train.patience = *f.patience;
  if (f.finetune_epochs) cfg.train.finetune_epochs = *f.finetune_epochs;
  return cfg;
}

TracePtr load(const std::string& path, seccan_schema schema, const std::string& attack) {
  seccan_attack kind = seccan_infer_attack(path.c_str());
  if (!attack.empty()) check(seccan_parse_attack(attack.c_str(), &kind), "--attack");
  seccan_trace* t = nullptr;
  size_t malformed = 0;
  check(seccan_trace_load(path.c_str(), schema, kind, &t, &malformed), path);
  TracePtr trace(t);
  std::fprintf(stderr, "loaded %s: %zu records (%zu attack, %zu malformed rows skipped) as %s\n",
               path.c_str(), seccan_trace_size(t), seccan_trace_attack_count(t), malformed,
               seccan_attack_name(kind));
  return trace;
}

struct Splits {
  TracePtr train, validation, test;
};

Splits split(const seccan_trace* trace, uint64_t seed) {
  seccan_trace *a = nullptr, *b = nullptr, *c = nullptr;
  check(seccan_trace_split(trace, 0.75, 0.15, 0.10, seed, &a, &b, &c), "split");
  return {TracePtr(a), TracePtr(b), TracePtr(c)};
}

void append(TracePtr& dst, const seccan_trace* src) {
  if (!dst) {
    dst.reset(seccan_trace_new());
    if (!dst) throw CliFailure{kDataError, "out of memory"};
  }
  check(seccan_trace_append(dst.get(), src), "append");
}

bool parse_frame(const std::string& id_text, const std::string& data_text, seccan_frame* out) {
  *out = {};
  char* end = nullptr;
  const unsigned long id = std::strtoul(id_text.c_str(), &end, 16);
  if (id_text.empty() || *end != '\0' || id > 0x7FF) return false;
  out->id = static_cast<uint16_t>(id);
  std::string hex;
  for (char c : data_text) {
    if (c != ' ' && c != ':' && c != ',') hex += c;
  }
  if (hex.size() % 2 != 0 || hex.size() > 16) return false;
  out->dlc = static_cast<uint8_t>(hex.size() / 2);
  for (size_t i = 0; i < out->dlc; ++i) {
    const std::string byte = hex.substr(2 * i, 2);
    out->data[i] = static_cast<uint8_t>(std::strtoul(byte.c_str(), &end, 16));
    if (*end != '\0') return false;
  }
  return true;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out || !(out << text)) throw CliFailure{kDataError, "cannot write " + path};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SecCAN simulator: CAN controller with an integrated quantised IDS"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config_path, "key=value run configuration file")->check(CLI::ExistingFile);
  app.add_option("--bitrate", g.bitrate, "bus bitrate in bit/s (default 1000000)");
  app.add_option("--clock-mhz", g.clock_mhz, "controller clock in MHz (default 16)");
  app.add_option("--ids-cycles", g.ids_cycles, "IDS latency in controller cycles (default 584)");
  app.add_option("--schema", g.schema, "trace schema: car_hacking or survival");
  app.add_option("--frame-done", g.frame_done, "end_of_eof, end_of_ifs or end_of_error_flags");
  app.add_option("--seed", g.seed, "seed for synthesis, splitting and training");
  app.add_option("--epochs", g.epochs, "QAT epochs before batch-norm folding (default 200)");
  app.add_option("--learning-rate", g.learning_rate, "Adam step size (default 0.0001)");
  app.add_option("--batch-size", g.batch_size, "minibatch size (default 256)");
  app.add_option("--dropout", g.dropout, "dropout rate on hidden layers (default 0.2)");
  app.add_option("--patience", g.patience, "early-stopping patience in epochs, 0 disables (default 5)");
  app.add_option("--finetune-epochs", g.finetune_epochs, "QAT epochs after folding (default 2)");

  auto* gen = app.add_subcommand("generate", "synthesise a labelled trace");
  std::string gen_attack = "dos_flood", gen_out;
  double gen_rate = 0.3;
  size_t gen_count = 10000;
  gen->add_option("--attack", gen_attack, "dos_flood, fuzzing, malfunction, flooding or none");
  gen->add_option("--rate", gen_rate, "per-slot injection probability");
  gen->add_option("-n,--count", gen_count, "number of records");
  gen->add_option("-o,--output", gen_out, "output CSV")->required();

  auto* tr = app.add_subcommand("train", "train the detector; each input is split 75:15:10");
  std::vector<std::string> tr_inputs;
  std::string tr_out, tr_attack, tr_test_dir;
  tr->add_option("inputs", tr_inputs, "trace files")->required();
  tr->add_option("-o,--output", tr_out, "weight file")->required();
  tr->add_option("--attack", tr_attack, "attack kind of every input (default: from file name)");
  tr->add_option("--test-dir", tr_test_dir, "write each input's test split here");

  auto* ev = app.add_subcommand("evaluate", "replay traces through the controller and score the IDS");
  std::vector<std::string> ev_inputs;
  std::string ev_weights, ev_attack, ev_kv;
  bool ev_test_split = false;
  std::optional<double> min_accuracy, max_fnr;
  ev->add_option("inputs", ev_inputs, "trace files")->required();
  ev->add_option("-w,--weights", ev_weights, "weight file (omit for the plain controller)");
  ev->add_option("--attack", ev_attack, "attack kind of every input (default: from file name)");
  ev->add_flag("--test-split", ev_test_split, "score only the test split of each input");
  ev->add_option("--kv", ev_kv, "write the key=value report here");
  ev->add_option("--min-accuracy", min_accuracy, "exit 3 when overall accuracy (%) is below");
  ev->add_option("--max-fnr", max_fnr, "exit 3 when overall FNR (%) is above");

  auto* sim = app.add_subcommand("simulate", "one frame through the controller");
  std::string sim_id = "123", sim_data = "0102030405", sim_prev_id, sim_prev_data, sim_weights;
  sim->add_option("--id", sim_id, "hex identifier");
  sim->add_option("--data", sim_data, "hex payload, up to 8 bytes");
  sim->add_option("--prev-id", sim_prev_id, "hex identifier of the preceding frame");
  sim->add_option("--prev-data", sim_prev_data, "payload of the preceding frame");
  sim->add_option("-w,--weights", sim_weights, "weight file (default: all-zero model)");

  auto* tim = app.add_subcommand("timing", "reception windows per DLC");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    const seccan_run_config cfg = resolve(g);

    if (*gen) {
      seccan_attack kind;
      check(seccan_parse_attack(gen_attack.c_str(), &kind), "--attack");
      seccan_trace* t = nullptr;
      check(seccan_trace_synthesize(kind, gen_rate, cfg.seed, gen_count, &t), "generate");
      TracePtr trace(t);
      check(seccan_trace_save(t, gen_out.c_str(), cfg.schema), gen_out);
      std::printf("wrote %zu records (%zu attack) to %s\n", seccan_trace_size(t),
                  seccan_trace_attack_count(t), gen_out.c_str());
      return kOk;
    }

    if (*tr) {
      TracePtr train_all, val_all;
      for (const std::string& path : tr_inputs) {
        TracePtr trace = load(path, cfg.schema, tr_attack);
        Splits s = split(trace.get(), cfg.seed);
        std::fprintf(stderr, "  split %zu / %zu / %zu\n", seccan_trace_size(s.train.get()),
                     seccan_trace_size(s.validation.get()), seccan_trace_size(s.test.get()));
        append(train_all, s.train.get());
        append(val_all, s.validation.get());
        if (!tr_test_dir.empty()) {
          std::filesystem::create_directories(tr_test_dir);
          const std::string out = (std::filesystem::path(tr_test_dir) / std::filesystem::path(path).filename()).string();
          check(seccan_trace_save(s.test.get(), out.c_str(), cfg.schema), out);
        }
      }
      seccan_model* m = nullptr;
      check(seccan_model_train(train_all.get(), val_all.get(), &cfg.train, &m), "train");
      ModelPtr model(m);
      for (size_t i = 0; i < seccan_model_epoch_count(m); ++i) {
        seccan_epoch e;
        check(seccan_model_epoch(m, i, &e), "epoch");
        std::printf("%-8s epoch %2d  train_loss %.6f  val_loss %.6f  val_acc %.4f%%\n",
                    e.finetune ? "finetune" : "train", e.epoch, e.train_loss, e.val_loss, e.val_accuracy);
      }
      check(seccan_model_save(m, tr_out.c_str()), tr_out);
      std::printf("wrote %s\n", tr_out.c_str());
      return kOk;
    }

    if (*ev) {
      ModelPtr model;
      if (!ev_weights.empty()) {
        seccan_model* m = nullptr;
        check(seccan_model_load(ev_weights.c_str(), &m), ev_weights);
        model.reset(m);
      }
      TracePtr all;
      for (const std::string& path : ev_inputs) {
        TracePtr trace = load(path, cfg.schema, ev_attack);
        if (ev_test_split) {
          Splits s = split(trace.get(), cfg.seed);
          append(all, s.test.get());
        } else {
          append(all, trace.get());
        }
      }
      seccan_report* r = nullptr;
      check(seccan_replay(all.get(), model.get(), &cfg.timing, &r), "replay");
      ReportPtr report(r);
      char* text = nullptr;
      check(seccan_report_text(r, &text), "report");
      CString text_owner(text);
      std::fputs(text, stdout);
      if (!ev_kv.empty()) {
        char* kv = nullptr;
        check(seccan_report_kv(r, &kv), "report");
        CString kv_owner(kv);
        write_file(ev_kv, kv);
      }
      seccan_metrics overall;
      seccan_report_overall(r, &overall);
      int rc = kOk;
      if (seccan_report_violations(r) > 0) {
        std::fprintf(stderr, "FAIL: %zu real-time violations\n", seccan_report_violations(r));
        rc = kThresholdFailure;
      }
      if (min_accuracy && overall.accuracy < *min_accuracy) {
        std::fprintf(stderr, "FAIL: accuracy %.4f%% below %.4f%%\n", overall.accuracy, *min_accuracy);
        rc = kThresholdFailure;
      }
      if (max_fnr && overall.fnr > *max_fnr) {
        std::fprintf(stderr, "FAIL: FNR %.4f%% above %.4f%%\n", overall.fnr, *max_fnr);
        rc = kThresholdFailure;
      }
      return rc;
    }

    if (*sim) {
      seccan_frame frame, prev;
      if (!parse_frame(sim_id, sim_data, &frame)) throw CliFailure{kUsage, "bad --id/--data"};
      const bool has_prev = !sim_prev_id.empty();
      if (has_prev && !parse_frame(sim_prev_id, sim_prev_data, &prev)) {
        throw CliFailure{kUsage, "bad --prev-id/--prev-data"};
      }
      ModelPtr model;
      if (!sim_weights.empty()) {
        seccan_model* m = nullptr;
        check(seccan_model_load(sim_weights.c_str(), &m), sim_weights);
        model.reset(m);
      }
      char* wave = nullptr;
      char* log = nullptr;
      check(seccan_simulate_frame(&frame, has_prev ? &prev : nullptr, model.get(), &cfg.timing, &wave, &log),
            "simulate");
      CString wave_owner(wave), log_owner(log);
      std::fputs(wave, stdout);
      seccan_window w;
      check(seccan_reception_window(&frame, &cfg.timing, &w), "window");
      std::printf("window %.4f us (t_max %.4f us), ids latency %lld cycles, slack %lld cycles: %s\n",
                  w.t_window_us, w.t_max_us, static_cast<long long>(cfg.timing.ids_latency_cycles),
                  static_cast<long long>(w.slack_cycles), w.meets ? "meets" : "VIOLATION");
      return w.meets ? kOk : kThresholdFailure;
    }

    if (*tim) {
      char* table = nullptr;
      size_t violations = 0;
      check(seccan_timing_table(&cfg.timing, &table, &violations), "timing");
      CString owner(table);
      std::fputs(table, stdout);
      return violations == 0 ? kOk : kThresholdFailure;
    }
  } catch (const CliFailure& f) {
    std::fprintf(stderr, "seccan: %s\n", f.message.c_str());
    return f.exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "seccan: %s\n", e.what());
    return kDataError;
  }
  return kUsage;
}
