// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "seccan/error.hpp"
#include "seccan/harness.hpp"
#include "seccan/qnn.hpp"

using namespace seccan;

namespace {

class ConstantDetector final : public Detector {
 public:
  explicit ConstantDetector(IdsFlag flag) : flag_(flag) {}
  IdsFlag classify(const FeatureVector&) const override { return flag_; }

 private:
  IdsFlag flag_;
};

// Flags exactly the feature vectors it was given.
class LookupDetector final : public Detector {
 public:
  explicit LookupDetector(std::set<std::array<std::uint8_t, kFeatureBytes>> attacks)
      : attacks_(std::move(attacks)) {}
  IdsFlag classify(const FeatureVector& f) const override {
    return attacks_.count(f.bytes) ? IdsFlag::kAttack : IdsFlag::kBenign;
  }

 private:
  std::set<std::array<std::uint8_t, kFeatureBytes>> attacks_;
};

Trace dos_trace(std::size_t n, std::uint64_t seed) {
  AttackProfile a;
  a.kind = AttackKind::kDosFlood;
  a.seed = seed;
  return synthesize(default_benign_profile(), a, n);
}

double pct(std::uint64_t num, std::uint64_t den) { return 100.0 * static_cast<double>(num) / static_cast<double>(den); }

}  // namespace

TEST_CASE("metrics of small confusion matrices") {
  const Metrics a = metrics_from_counts(1, 0, 1, 0);
  CHECK(a.precision == 100.0);
  CHECK(a.recall == 100.0);
  CHECK(a.f1 == 100.0);
  CHECK(a.accuracy == 100.0);
  CHECK(a.fnr == 0.0);
  CHECK_FALSE(a.precision_degenerate);
  CHECK_FALSE(a.recall_degenerate);

  const Metrics b = metrics_from_counts(3, 1, 5, 1);
  CHECK(b.precision == doctest::Approx(75.0));
  CHECK(b.recall == doctest::Approx(75.0));
  CHECK(b.f1 == doctest::Approx(75.0));
  CHECK(b.fnr == doctest::Approx(25.0));
  CHECK(b.accuracy == doctest::Approx(80.0));
  CHECK(b.total() == 10);
}

TEST_CASE("zero denominators take conventional values and are flagged") {
  // only benign traffic, all correct
  const Metrics m = metrics_from_counts(0, 0, 50, 0);
  CHECK(m.precision == 100.0);
  CHECK(m.recall == 100.0);
  CHECK(m.fnr == 0.0);
  CHECK(m.accuracy == 100.0);
  CHECK(m.precision_degenerate);
  CHECK(m.recall_degenerate);

  // detector never fires on attacks
  const Metrics z = metrics_from_counts(0, 0, 5, 5);
  CHECK(z.precision_degenerate);
  CHECK_FALSE(z.recall_degenerate);
  CHECK(z.recall == 0.0);
  CHECK(z.fnr == 100.0);

  const Metrics all_wrong = metrics_from_counts(0, 3, 0, 4);
  CHECK(all_wrong.precision == 0.0);
  CHECK(all_wrong.recall == 0.0);
  CHECK(all_wrong.f1 == 0.0);
  CHECK(all_wrong.accuracy == 0.0);
}

TEST_CASE("metrics agree with the textbook formulas on random matrices") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::uint64_t> count(0, 500);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t tp = count(rng) + 1, fp = count(rng), tn = count(rng), fn = count(rng);
    const Metrics m = metrics_from_counts(tp, fp, tn, fn);
    const double p = pct(tp, tp + fp);
    const double r = pct(tp, tp + fn);
    REQUIRE(m.precision == p);
    REQUIRE(m.recall == r);
    REQUIRE(m.f1 == doctest::Approx(2 * p * r / (p + r)).epsilon(1e-12));
    REQUIRE(m.accuracy == pct(tp + tn, tp + fp + tn + fn));
    REQUIRE(m.fnr == pct(fn, tp + fn));
    REQUIRE(m.fnr + m.recall == doctest::Approx(100.0).epsilon(1e-12));
  }
}

TEST_CASE("compute_metrics counts labels against verdicts") {
  const std::vector<Label> labels = {Label::kAttack, Label::kAttack, Label::kBenign, Label::kBenign, Label::kAttack};
  const std::vector<IdsFlag> flags = {IdsFlag::kAttack, IdsFlag::kBenign, IdsFlag::kBenign, IdsFlag::kAttack,
                                      IdsFlag::kAttack};
  const Metrics m = compute_metrics(labels, flags);
  CHECK(m.tp == 2);
  CHECK(m.fn == 1);
  CHECK(m.tn == 1);
  CHECK(m.fp == 1);
  CHECK_THROWS_AS(compute_metrics(labels, std::span(flags).first(3)), Error);
  CHECK_THROWS_AS(compute_metrics({}, {}), Error);
}

TEST_CASE("replay with an all-zero model on benign traffic") {
  Trace t;
  for (const TraceRecord& r : dos_trace(400, 3)) {
    if (r.label == Label::kBenign && t.size() < 100) t.push_back(r);
  }
  REQUIRE(t.size() == 100);
  auto det = std::make_shared<QnnDetector>(qnn::QuantizedMlp::zeros());
  const DetectionReport rep = replay(t, det, {});
  CHECK(rep.total == 100);
  CHECK(rep.delivered == 100);
  CHECK(rep.dropped == 0);
  CHECK(rep.overall.tn == 100);
  CHECK(rep.overall.accuracy == 100.0);
  CHECK(rep.overall.recall_degenerate);
  CHECK(rep.overall.precision_degenerate);
  CHECK(rep.violations == 0);
  CHECK(rep.latency.samples == 100);
  CHECK(rep.latency.min_slack_us > 0.0);
}

TEST_CASE("replay scores a lookup detector exactly") {
  Trace t;
  int k = 0;
  for (const TraceRecord& r : dos_trace(200, 8)) {
    if (k++ % 20 == 0) t.push_back(r);
  }
  REQUIRE(t.size() == 10);
  const qnn::Dataset ds = build_dataset(t);
  REQUIRE(ds.features.size() == 10);

  // flag the first three records, whatever their label
  std::set<std::array<std::uint8_t, kFeatureBytes>> flagged;
  for (std::size_t i = 0; i < 3; ++i) flagged.insert(ds.features[i].bytes);
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const bool attack = flagged.count(ds.features[i].bytes) > 0;
    const bool truth = t[i].label == Label::kAttack;
    (attack ? (truth ? tp : fp) : (truth ? fn : tn))++;
  }
  const DetectionReport rep = replay(t, std::make_shared<LookupDetector>(flagged), {});
  CHECK(rep.overall.tp == tp);
  CHECK(rep.overall.fp == fp);
  CHECK(rep.overall.tn == tn);
  CHECK(rep.overall.fn == fn);
  CHECK(rep.misclassified == fp + fn);
}

TEST_CASE("replay conserves records and is deterministic") {
  Trace t = dos_trace(3000, 4);
  append_segment(t, dos_trace(1000, 5));
  auto det = std::make_shared<ConstantDetector>(IdsFlag::kAttack);
  const DetectionReport a = replay(t, det, {});
  CHECK(a.total == t.size());
  CHECK(a.delivered + a.dropped == a.total);
  CHECK(a.overall.total() == a.delivered);
  CHECK(a.overall.tn == 0);
  CHECK(a.overall.fn == 0);

  std::uint64_t per_kind = 0;
  for (const auto& [kind, m] : a.per_attack) per_kind += m.total();
  CHECK(per_kind == a.overall.total());

  const DetectionReport b = replay(t, det, {});
  CHECK(format_report_kv(a) == format_report_kv(b));
  CHECK(format_report_text(a) == format_report_text(b));
}

TEST_CASE("replay without a detector delivers and skips every frame") {
  const Trace t = dos_trace(200, 1);
  const DetectionReport rep = replay(t, nullptr, {});
  CHECK(rep.delivered == 200);
  CHECK(rep.ids_skipped == 200);
  CHECK(rep.latency.samples == 0);
}

TEST_CASE("key=value report carries the documented keys") {
  const DetectionReport rep = replay(dos_trace(500, 2), std::make_shared<ConstantDetector>(IdsFlag::kBenign), {});
  const std::string kv = format_report_kv(rep);
  for (const char* key : {"frames.total=", "frames.delivered=", "config.bitrate_bps=1000000",
                          "config.ids_latency_cycles=584", "config.frame_done=end_of_error_flags",
                          "metrics.overall.tp=0", "metrics.overall.fnr=100", "metrics.dos_flood.tn=",
                          "latency.slack_min_us=", "realtime.violations=0"}) {
    CHECK_MESSAGE(kv.find(key) != std::string::npos, key);
  }
}

TEST_CASE("waveform of the five-byte frame matches the golden file") {
  ControllerConfig cfg;
  Controller ctl(cfg, std::make_shared<QnnDetector>(qnn::QuantizedMlp::zeros()));
  const CanFrame frame(0x123, {1, 2, 3, 4, 5});
  ctl.feed_bits(encode_frame(frame));
  const std::string wave = waveform_report(ctl.event_log(), cfg.timing);

  const std::string path = std::string(SECCAN_TEST_DATA_DIR) + "/golden/waveform_5byte.txt";
  if (!std::filesystem::exists(path)) {
    std::ofstream(path) << wave;
    MESSAGE("pinned new golden file " << path);
  }
  std::ifstream in(path);
  std::stringstream golden;
  golden << in.rdbuf();
  CHECK(wave == golden.str());

  // the verdict column lies left of frame_done
  std::istringstream lines(wave);
  std::string line, ready, done;
  while (std::getline(lines, line)) {
    if (line.rfind("ids_output_ready", 0) == 0) ready = line;
    if (line.rfind("frame_done", 0) == 0) done = line;
  }
  REQUIRE_FALSE(ready.empty());
  REQUIRE_FALSE(done.empty());
  CHECK(ready.find('#') < done.find('#'));

  CHECK(waveform_report({}, cfg.timing).empty());
}

TEST_CASE("run configuration parser") {
  const RunConfig rc = parse_run_config(
      "# comment\n"
      "bitrate = 500000\n"
      "clock-mhz=16\n"
      "ids-cycles=300\n"
      "frame-done=end_of_ifs\n"
      "schema=survival\n"
      "seed=9\n"
      "epochs=5\n"
      "learning-rate=0.01\n"
      "batch-size=32\n"
      "dropout=0.1\n"
      "patience=2\n"
      "finetune-epochs=1\n");
  CHECK(rc.controller.timing.bitrate_bps == 500000);
  CHECK(rc.controller.timing.controller_clock_hz == 16000000);
  CHECK(rc.controller.ids_latency_cycles == 300);
  CHECK(rc.controller.timing.frame_done == FrameDoneConvention::kEndOfIfs);
  CHECK(rc.schema == TraceSchema::kSurvival);
  CHECK(rc.seed == 9);
  CHECK(rc.train.seed == 9);
  CHECK(rc.train.epochs == 5);
  CHECK(rc.train.learning_rate == doctest::Approx(0.01));
  CHECK(rc.train.batch_size == 32);
  CHECK(rc.train.dropout_rate == doctest::Approx(0.1));
  CHECK(rc.train.patience == 2);
  CHECK(rc.train.finetune_epochs == 1);

  // later sources override earlier ones
  const RunConfig over = parse_run_config("ids-cycles=100\n", rc);
  CHECK(over.controller.ids_latency_cycles == 100);
  CHECK(over.train.epochs == 5);

  auto code_of = [](const std::string& text) {
    try {
      (void)parse_run_config(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  CHECK(code_of("colour=blue\n") == ErrorCode::kConfig);
  CHECK(code_of("bitrate\n") == ErrorCode::kConfig);
  CHECK(code_of("frame-done=later\n") == ErrorCode::kConfig);
  CHECK(code_of("bitrate=0\n") == ErrorCode::kConfig);
  CHECK_THROWS_AS(load_run_config("/nonexistent/seccan.conf"), Error);
}

TEST_CASE("timing table meets the deadline for every frame length") {
  const ControllerConfig cfg;
  const auto rows = timing_table(cfg);
  CHECK(rows.size() == 27);
  for (const TimingRow& r : rows) {
    CHECK(r.meets);
    CHECK(r.window_eof_cycles < r.window_ifs_cycles);
    CHECK(r.window_ifs_cycles < r.window_eflag_cycles);
    CHECK(r.t_max_cycles >= r.window_eflag_cycles);
    CHECK((r.t_max_cycles == r.window_eflag_cycles) == (r.dlc == 0));
  }
  CHECK(format_timing_table(cfg).find("violations under end_of_error_flags: 0 of 27") != std::string::npos);
}
