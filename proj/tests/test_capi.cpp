// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>

#include "seccan/seccan.h"

namespace {

struct Free {
  void operator()(seccan_trace* t) const { seccan_trace_free(t); }
  void operator()(seccan_model* m) const { seccan_model_free(m); }
  void operator()(seccan_report* r) const { seccan_report_free(r); }
  void operator()(char* s) const { seccan_string_free(s); }
};
template <typename T>
using Owned = std::unique_ptr<T, Free>;

seccan_timing default_timing() {
  seccan_run_config cfg;
  seccan_run_config_default(&cfg);
  return cfg.timing;
}

}  // namespace

TEST_CASE("defaults and name lookups") {
  seccan_run_config cfg;
  seccan_run_config_default(&cfg);
  CHECK(cfg.timing.bitrate_bps == 1000000);
  CHECK(cfg.timing.controller_clock_hz == 16000000);
  CHECK(cfg.timing.ids_latency_cycles == 584);
  CHECK(cfg.timing.frame_done == SECCAN_FRAME_DONE_END_OF_ERROR_FLAGS);

  seccan_frame_done fd;
  CHECK(seccan_parse_frame_done("end_of_ifs", &fd) == SECCAN_OK);
  CHECK(fd == SECCAN_FRAME_DONE_END_OF_IFS);
  CHECK(seccan_parse_frame_done("soon", &fd) == SECCAN_ERR_CONFIG);
  CHECK(std::string(seccan_last_error()).size() > 0);

  seccan_attack a;
  CHECK(seccan_parse_attack("fuzzing", &a) == SECCAN_OK);
  CHECK(a == SECCAN_ATTACK_FUZZING);
  CHECK(std::string(seccan_attack_name(SECCAN_ATTACK_DOS_FLOOD)) == "dos_flood");
  CHECK(seccan_infer_attack("x/DoS_dataset.csv") == SECCAN_ATTACK_DOS_FLOOD);
  CHECK(std::string(seccan_status_name(SECCAN_ERR_CHECKSUM_MISMATCH)).size() > 0);
}

TEST_CASE("null arguments are rejected") {
  CHECK(seccan_trace_synthesize(SECCAN_ATTACK_DOS_FLOOD, 0.3, 1, 10, nullptr) == SECCAN_ERR_INVALID_ARGUMENT);
  CHECK(seccan_reception_window(nullptr, nullptr, nullptr) == SECCAN_ERR_INVALID_ARGUMENT);
  seccan_trace* t = nullptr;
  CHECK(seccan_trace_synthesize(SECCAN_ATTACK_NONE, 0.3, 1, 10, &t) == SECCAN_ERR_CONFIG);
  CHECK(t == nullptr);
}

TEST_CASE("reception window of the five byte frame") {
  const seccan_frame f{0x123, 5, {1, 2, 3, 4, 5}};
  const seccan_timing t = default_timing();
  seccan_window w;
  REQUIRE(seccan_reception_window(&f, &t, &w) == SECCAN_OK);
  CHECK(w.meets == 1);
  CHECK(w.t_window_cycles - 584 == w.slack_cycles);
  CHECK(w.t_window_us == doctest::Approx(w.t_window_cycles / 16.0));
}

TEST_CASE("synthesize, train, save, load and replay") {
  seccan_trace* raw = nullptr;
  REQUIRE(seccan_trace_synthesize(SECCAN_ATTACK_DOS_FLOOD, 0.3, 4, 4000, &raw) == SECCAN_OK);
  Owned<seccan_trace> trace(raw);
  CHECK(seccan_trace_size(trace.get()) == 4000);
  CHECK(seccan_trace_attack_count(trace.get()) > 1000);

  seccan_trace *tr = nullptr, *va = nullptr, *te = nullptr;
  REQUIRE(seccan_trace_split(trace.get(), 0.75, 0.15, 0.10, 4, &tr, &va, &te) == SECCAN_OK);
  Owned<seccan_trace> train(tr), val(va), test(te);
  CHECK(seccan_trace_size(test.get()) == 400);

  seccan_run_config cfg;
  seccan_run_config_default(&cfg);
  cfg.train.epochs = 3;
  cfg.train.finetune_epochs = 1;
  cfg.train.learning_rate = 3e-3;
  cfg.train.batch_size = 64;
  seccan_model* m = nullptr;
  REQUIRE(seccan_model_train(train.get(), val.get(), &cfg.train, &m) == SECCAN_OK);
  Owned<seccan_model> model(m);
  CHECK(seccan_model_epoch_count(model.get()) == 4);
  seccan_epoch ep;
  REQUIRE(seccan_model_epoch(model.get(), 3, &ep) == SECCAN_OK);
  CHECK(ep.finetune == 1);
  CHECK(seccan_model_epoch(model.get(), 4, &ep) == SECCAN_ERR_INVALID_ARGUMENT);

  const auto path = (std::filesystem::temp_directory_path() / "seccan_capi_model.bin").string();
  REQUIRE(seccan_model_save(model.get(), path.c_str()) == SECCAN_OK);
  seccan_model* lm = nullptr;
  REQUIRE(seccan_model_load(path.c_str(), &lm) == SECCAN_OK);
  Owned<seccan_model> loaded(lm);
  std::filesystem::remove(path);

  const seccan_frame dos{0x000, 8, {0}};
  const seccan_frame benign{0x316, 8, {0x05, 0x21, 0x68, 0x09, 0x21, 0x21, 0x00, 0x6F}};
  int a1 = -1, a2 = -1;
  double p1 = 0, p2 = 0;
  REQUIRE(seccan_model_classify(model.get(), &dos, &benign, &a1, &p1) == SECCAN_OK);
  REQUIRE(seccan_model_classify(loaded.get(), &dos, &benign, &a2, &p2) == SECCAN_OK);
  CHECK(a1 == a2);
  CHECK(p1 == p2);
  CHECK(a1 == 1);

  const seccan_timing t = default_timing();
  seccan_report* r = nullptr;
  REQUIRE(seccan_replay(test.get(), loaded.get(), &t, &r) == SECCAN_OK);
  Owned<seccan_report> report(r);
  seccan_metrics overall;
  seccan_report_overall(report.get(), &overall);
  CHECK(overall.tp + overall.fp + overall.tn + overall.fn == 400);
  CHECK(overall.accuracy > 90.0);
  CHECK(seccan_report_violations(report.get()) == 0);
  seccan_metrics per;
  CHECK(seccan_report_attack(report.get(), SECCAN_ATTACK_DOS_FLOOD, &per) == SECCAN_OK);
  CHECK(seccan_report_attack(report.get(), SECCAN_ATTACK_FUZZING, &per) == SECCAN_ERR_INVALID_ARGUMENT);

  char* kv = nullptr;
  REQUIRE(seccan_report_kv(report.get(), &kv) == SECCAN_OK);
  Owned<char> kv_owned(kv);
  CHECK(std::string(kv).find("realtime.violations=0") != std::string::npos);
}

TEST_CASE("corrupt weight files surface the checksum status") {
  const auto path = (std::filesystem::temp_directory_path() / "seccan_capi_bad.bin").string();
  std::FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f);
  std::fputs("SCQW not really weights", f);
  std::fclose(f);
  seccan_model* m = nullptr;
  CHECK(seccan_model_load(path.c_str(), &m) == SECCAN_ERR_CHECKSUM_MISMATCH);
  CHECK(m == nullptr);
  std::filesystem::remove(path);
  CHECK(seccan_model_load(path.c_str(), &m) == SECCAN_ERR_IO);
}

TEST_CASE("simulate and timing table") {
  const seccan_frame f{0x123, 5, {1, 2, 3, 4, 5}};
  const seccan_timing t = default_timing();
  char* wave = nullptr;
  char* log = nullptr;
  REQUIRE(seccan_simulate_frame(&f, nullptr, nullptr, &t, &wave, &log) == SECCAN_OK);
  Owned<char> w(wave), l(log);
  CHECK(std::string(wave).find("header_detector") != std::string::npos);
  CHECK(std::string(log).find("FrameDone") != std::string::npos);

  char* table = nullptr;
  size_t violations = 99;
  REQUIRE(seccan_timing_table(&t, &table, &violations) == SECCAN_OK);
  Owned<char> tb(table);
  CHECK(violations == 0);

  seccan_timing slow = t;
  slow.ids_latency_cycles = 5000;
  char* table2 = nullptr;
  REQUIRE(seccan_timing_table(&slow, &table2, &violations) == SECCAN_OK);
  Owned<char> tb2(table2);
  CHECK(violations == 27);
}
