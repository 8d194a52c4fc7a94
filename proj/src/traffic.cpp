// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "seccan/traffic.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "seccan/error.hpp"

namespace seccan {

const char* to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kNone: return "none";
    case AttackKind::kDosFlood: return "dos_flood";
    case AttackKind::kFuzzing: return "fuzzing";
    case AttackKind::kMalfunction: return "malfunction";
    case AttackKind::kFlooding: return "flooding";
  }
  return "?";
}

std::optional<AttackKind> parse_attack_kind(const std::string& text) {
  for (AttackKind k : {AttackKind::kNone, AttackKind::kDosFlood, AttackKind::kFuzzing,
                       AttackKind::kMalfunction, AttackKind::kFlooding}) {
    if (text == to_string(k)) return k;
  }
  if (text == "dos") return AttackKind::kDosFlood;
  return std::nullopt;
}

AttackKind infer_attack_kind(const std::string& path) {
  const auto slash = path.find_last_of('/');
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (name.find("dos") != std::string::npos) return AttackKind::kDosFlood;
  if (name.find("fuzz") != std::string::npos) return AttackKind::kFuzzing;
  if (name.find("flood") != std::string::npos) return AttackKind::kFlooding;
  if (name.find("malfunction") != std::string::npos || name.find("gear") != std::string::npos ||
      name.find("rpm") != std::string::npos || name.find("spoof") != std::string::npos) {
    return AttackKind::kMalfunction;
  }
  return AttackKind::kNone;
}

const char* to_string(TraceSchema schema) {
  return schema == TraceSchema::kCarHacking ? "car_hacking" : "survival";
}

std::optional<TraceSchema> parse_schema(const std::string& text) {
  if (text == "car_hacking") return TraceSchema::kCarHacking;
  if (text == "survival") return TraceSchema::kSurvival;
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? comma : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

template <typename T>
bool parse_hex(std::string_view text, T& out) {
  if (text.empty()) return false;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), out, 16);
  return r.ec == std::errc() && r.ptr == text.data() + text.size();
}

// "1478198376.389427" -> microseconds, exact.
bool parse_timestamp(std::string_view text, std::int64_t& us) {
  const std::size_t dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  std::int64_t seconds = 0;
  auto r = std::from_chars(whole.data(), whole.data() + whole.size(), seconds);
  if (whole.empty() || r.ec != std::errc() || r.ptr != whole.data() + whole.size() || seconds < 0) {
    return false;
  }
  std::int64_t frac = 0;
  if (dot != std::string_view::npos) {
    std::string_view digits = text.substr(dot + 1);
    if (digits.empty() || digits.size() > 9) return false;
    for (char c : digits) {
      if (c < '0' || c > '9') return false;
    }
    std::string padded(digits);
    padded.resize(6, '0');
    auto r2 = std::from_chars(padded.data(), padded.data() + 6, frac);
    if (r2.ec != std::errc()) return false;
  }
  us = seconds * 1'000'000 + frac;
  return true;
}

struct RowOutcome {
  std::optional<TraceRecord> record;
  std::string problem;
};

RowOutcome parse_row(std::string_view line, TraceSchema schema, AttackKind source) {
  const auto fields = split_fields(line);
  RowOutcome out;
  if (fields.size() < 4) {
    out.problem = "too few columns";
    return out;
  }
  TraceRecord rec;
  rec.source = source;
  if (!parse_timestamp(fields[0], rec.timestamp_us)) {
    out.problem = "bad timestamp";
    return out;
  }
  std::uint16_t id = 0;
  if (!parse_hex(fields[1], id) || id > kMaxStandardId) {
    out.problem = "bad identifier";
    return out;
  }
  unsigned dlc = 0;
  const auto r = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), dlc);
  if (r.ec != std::errc() || r.ptr != fields[2].data() + fields[2].size() || dlc > kMaxPayload) {
    out.problem = "bad DLC";
    return out;
  }

  std::vector<std::string_view> data_fields;
  std::string_view flag;
  if (schema == TraceSchema::kCarHacking) {
    if (fields.size() != 3 + dlc + 1) {
      out.problem = "column count inconsistent with DLC";
      return out;
    }
    data_fields.assign(fields.begin() + 3, fields.begin() + 3 + dlc);
    flag = fields.back();
  } else {
    if (fields.size() != 5) {
      out.problem = "expected 5 columns";
      return out;
    }
    std::string_view bytes = fields[3];
    while (!bytes.empty()) {
      const std::size_t sp = bytes.find(' ');
      std::string_view tok = bytes.substr(0, sp);
      if (!tok.empty()) data_fields.push_back(tok);
      if (sp == std::string_view::npos) break;
      bytes.remove_prefix(sp + 1);
    }
    if (data_fields.size() != dlc) {
      out.problem = "data byte count inconsistent with DLC";
      return out;
    }
    flag = fields[4];
  }

  std::array<std::uint8_t, kMaxPayload> payload{};
  for (std::size_t i = 0; i < dlc; ++i) {
    if (!parse_hex(data_fields[i], payload[i])) {
      out.problem = "bad data byte";
      return out;
    }
  }
  if (flag == "R") {
    rec.label = Label::kBenign;
  } else if (flag == "T") {
    rec.label = Label::kAttack;
  } else {
    out.problem = "bad flag";
    return out;
  }
  rec.frame = CanFrame(id, std::span<const std::uint8_t>(payload.data(), dlc));
  out.record = rec;
  return out;
}

bool looks_like_header(std::string_view line) {
  const auto t = trim(line);
  return !t.empty() && !(t.front() >= '0' && t.front() <= '9');
}

}  // namespace

Trace parse_trace(const std::string& text, TraceSchema schema, AttackKind source, LoadStats* stats) {
  LoadStats local;
  LoadStats& st = stats ? *stats : local;
  st = LoadStats{};
  Trace trace;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (first && looks_like_header(line)) {
      first = false;
      continue;
    }
    first = false;
    ++st.rows;
    RowOutcome row = parse_row(line, schema, source);
    if (!row.record) {
      ++st.malformed;
      if (st.problems.size() < 10) st.problems.push_back("line " + std::to_string(line_no) + ": " + row.problem);
      continue;
    }
    trace.push_back(*row.record);
  }
  st.accepted = trace.size();
  if (st.rows == 0) throw Error(ErrorCode::kEmptyTrace, "trace contains no rows");
  if (trace.empty()) {
    throw Error(ErrorCode::kSchema, "no row matches the " + std::string(to_string(schema)) +
                                        " schema" +
                                        (st.problems.empty() ? "" : " (" + st.problems.front() + ")"));
  }
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i].timestamp_us < trace[i - 1].timestamp_us) ++st.reordered;
  }
  if (st.reordered > 0) {
    std::stable_sort(trace.begin(), trace.end(), [](const TraceRecord& a, const TraceRecord& b) {
      return a.timestamp_us < b.timestamp_us;
    });
  }
  return trace;
}

Trace load_trace(const std::string& path, TraceSchema schema, AttackKind source, LoadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str(), schema, source, stats);
}

std::string format_trace(const Trace& trace, TraceSchema schema) {
  std::string out;
  char buf[64];
  for (const TraceRecord& r : trace) {
    std::snprintf(buf, sizeof buf, "%" PRId64 ".%06" PRId64 ",%04X,%u", r.timestamp_us / 1'000'000,
                  r.timestamp_us % 1'000'000, r.frame.id(), unsigned{r.frame.dlc()});
    out += buf;
    if (schema == TraceSchema::kCarHacking) {
      for (std::uint8_t b : r.frame.payload()) {
        std::snprintf(buf, sizeof buf, ",%02x", b);
        out += buf;
      }
    } else {
      out += ',';
      bool first = true;
      for (std::uint8_t b : r.frame.payload()) {
        std::snprintf(buf, sizeof buf, first ? "%02x" : " %02x", b);
        out += buf;
        first = false;
      }
    }
    out += r.label == Label::kAttack ? ",T\n" : ",R\n";
  }
  return out;
}

void save_trace(const Trace& trace, const std::string& path, TraceSchema schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out << format_trace(trace, schema);
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path);
}

BenignProfile default_benign_profile() {
  auto sig = [](std::uint16_t id, std::uint8_t dlc, std::int64_t period_ms,
                std::array<std::uint8_t, 8> base, int counter, int signal) {
    return BenignSignal{id, dlc, period_ms * 1000, base, counter, signal};
  };
  BenignProfile p;
  p.signals = {
      sig(0x316, 8, 10, {0x05, 0x21, 0x68, 0x09, 0x21, 0x21, 0x00, 0x6F}, -1, 2),
      sig(0x18F, 8, 10, {0xFE, 0x3B, 0x00, 0x00, 0x00, 0x3C, 0x00, 0x00}, 6, 1),
      sig(0x260, 8, 10, {0x19, 0x21, 0x22, 0x30, 0x08, 0x8E, 0x6D, 0x3A}, 7, 3),
      sig(0x2A0, 8, 10, {0x64, 0x00, 0x9A, 0x1D, 0x97, 0x02, 0xBD, 0x00}, 5, 0),
      sig(0x329, 8, 10, {0x40, 0xBB, 0x7F, 0x14, 0x11, 0x20, 0x00, 0x14}, -1, 1),
      sig(0x545, 8, 10, {0xD8, 0x00, 0x00, 0x8A, 0x00, 0x00, 0x00, 0x00}, 4, -1),
      sig(0x153, 8, 10, {0x00, 0x21, 0x10, 0xFF, 0x00, 0xFF, 0x00, 0x00}, 6, -1),
      sig(0x2C0, 8, 10, {0x15, 0x00, 0x00, 0x00, 0x00, 0x00, 0x5C, 0x2D}, -1, 0),
      sig(0x130, 8, 10, {0x08, 0x80, 0x00, 0xFF, 0x47, 0x80, 0x0A, 0x9B}, 6, 4),
      sig(0x140, 8, 10, {0x00, 0x00, 0x00, 0x00, 0x08, 0x27, 0x15, 0x3A}, 7, -1),
      sig(0x43F, 8, 10, {0x01, 0x45, 0x60, 0xFF, 0x6B, 0x00, 0x00, 0x00}, -1, 4),
      sig(0x440, 8, 10, {0xFF, 0x00, 0x00, 0x00, 0xFF, 0x6B, 0x00, 0x00}, -1, -1),
      sig(0x370, 8, 10, {0x00, 0x20, 0x00, 0x00, 0x00, 0x00, 0x3E, 0xA1}, -1, -1),
      sig(0x4B0, 8, 10, {0x00, 0x00, 0x0C, 0x35, 0x00, 0x00, 0x27, 0x10}, -1, 0),
      sig(0x4B1, 8, 10, {0x00, 0x00, 0x0C, 0x35, 0x00, 0x00, 0x27, 0x10}, -1, -1),
      sig(0x164, 8, 20, {0x00, 0x08, 0x00, 0x00, 0x3A, 0x00, 0x32, 0xC4}, 6, -1),
      sig(0x1F1, 8, 20, {0x0F, 0x00, 0x00, 0x00, 0x00, 0x00, 0xB5, 0x44}, -1, -1),
      sig(0x2B0, 5, 10, {0xFF, 0x02, 0x00, 0x47, 0x94, 0, 0, 0}, 4, 0),
      sig(0x350, 8, 20, {0x05, 0x20, 0x54, 0x68, 0x71, 0x00, 0x00, 0x2D}, 7, -1),
      sig(0x394, 8, 100, {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x60, 0x30}, -1, -1),
      sig(0x4F0, 8, 20, {0x00, 0x00, 0x00, 0x00, 0x00, 0x9F, 0xC2, 0x1B}, -1, -1),
      sig(0x5A0, 8, 100, {0x00, 0x00, 0x00, 0x00, 0x00, 0x80, 0x4D, 0x7A}, -1, -1),
      sig(0x5F0, 2, 200, {0x8B, 0x3C, 0, 0, 0, 0, 0, 0}, -1, -1),
      sig(0x690, 8, 100, {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xD1, 0x2E}, -1, 0),
      sig(0x251, 8, 20, {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x10, 0x00}, 7, -1),
      sig(0x366, 7, 10, {0x34, 0x8C, 0x00, 0x00, 0x00, 0x00, 0x00, 0}, -1, 1),
  };
  return p;
}

void AttackProfile::validate() const {
  if (!(injection_rate > 0.0 && injection_rate < 1.0)) {
    throw Error(ErrorCode::kConfig, "injection rate must lie in (0, 1)");
  }
  if (kind == AttackKind::kNone) throw Error(ErrorCode::kConfig, "attack profile needs an attack kind");
  if (target_id > kMaxStandardId) throw Error(ErrorCode::kConfig, "target identifier exceeds 11 bits");
}

Trace synthesize(const BenignProfile& benign, const AttackProfile& attack, std::size_t n) {
  attack.validate();
  if (benign.signals.empty()) throw Error(ErrorCode::kConfig, "benign profile has no signals");
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "record count must be positive");

  std::mt19937_64 rng(attack.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> byte(0, 255);

  struct State {
    std::int64_t next_us;
    std::array<std::uint8_t, 8> data;
  };
  std::vector<State> state;
  for (const BenignSignal& s : benign.signals) {
    std::uniform_int_distribution<std::int64_t> phase(0, s.period_us - 1);
    state.push_back({benign.start_us + phase(rng), s.base});
  }

  auto next_benign = [&]() -> TraceRecord {
    std::size_t k = 0;
    for (std::size_t i = 1; i < state.size(); ++i) {
      if (state[i].next_us < state[k].next_us) k = i;
    }
    const BenignSignal& sig = benign.signals[k];
    State& st = state[k];
    if (sig.counter_byte >= 0) ++st.data[static_cast<std::size_t>(sig.counter_byte)];
    if (sig.signal_byte >= 0) {
      auto& v = st.data[static_cast<std::size_t>(sig.signal_byte)];
      const std::uint8_t base = sig.base[static_cast<std::size_t>(sig.signal_byte)];
      const int step = static_cast<int>(rng() % 3) - 1;
      const int lo = std::max(0, base - 24);
      const int hi = std::min(255, base + 24);
      v = static_cast<std::uint8_t>(std::clamp(v + step, lo, hi));
    }
    TraceRecord rec;
    rec.timestamp_us = st.next_us;
    rec.frame = CanFrame(sig.id, std::span<const std::uint8_t>(st.data.data(), sig.dlc));
    rec.label = Label::kBenign;
    rec.source = attack.kind;
    // ~1% period jitter
    const std::int64_t jitter = static_cast<std::int64_t>(rng() % 200) - 100;
    st.next_us += sig.period_us + jitter * sig.period_us / 10'000;
    return rec;
  };

  // flooding replays one frozen legitimate frame
  const BenignSignal& frozen_sig = benign.signals[rng() % benign.signals.size()];
  const CanFrame frozen(frozen_sig.id, std::span<const std::uint8_t>(frozen_sig.base.data(), frozen_sig.dlc));

  auto make_attack = [&]() -> CanFrame {
    switch (attack.kind) {
      case AttackKind::kDosFlood:
        return CanFrame(0x000, {0, 0, 0, 0, 0, 0, 0, 0});
      case AttackKind::kFuzzing: {
        const auto id = static_cast<std::uint16_t>(rng() % (kMaxStandardId + 1));
        const auto dlc = static_cast<std::size_t>(rng() % (kMaxPayload + 1));
        std::array<std::uint8_t, 8> data{};
        for (std::size_t i = 0; i < dlc; ++i) data[i] = static_cast<std::uint8_t>(byte(rng));
        return CanFrame(id, std::span<const std::uint8_t>(data.data(), dlc));
      }
      case AttackKind::kMalfunction: {
        std::uint8_t dlc = 8;
        for (const BenignSignal& s : benign.signals) {
          if (s.id == attack.target_id) dlc = s.dlc;
        }
        std::array<std::uint8_t, 8> data{};
        for (std::size_t i = 0; i < dlc; ++i) data[i] = static_cast<std::uint8_t>(byte(rng));
        return CanFrame(attack.target_id, std::span<const std::uint8_t>(data.data(), dlc));
      }
      case AttackKind::kFlooding:
      case AttackKind::kNone:
        break;
    }
    return frozen;
  };

  Trace trace;
  trace.reserve(n);
  std::int64_t now = benign.start_us;
  // Attack gaps are drawn around the bus occupancy of one frame.
  std::uniform_int_distribution<std::int64_t> attack_gap(150, 400);
  for (std::size_t i = 0; i < n; ++i) {
    if (unit(rng) < attack.injection_rate) {
      TraceRecord rec;
      now += attack_gap(rng);
      rec.timestamp_us = now;
      rec.frame = make_attack();
      rec.label = Label::kAttack;
      rec.source = attack.kind;
      trace.push_back(rec);
      // benign transmissions blocked during the injection slip behind it
      for (State& st : state) st.next_us = std::max(st.next_us, now + 1);
    } else {
      TraceRecord rec = next_benign();
      rec.timestamp_us = std::max(rec.timestamp_us, now);
      now = rec.timestamp_us;
      trace.push_back(rec);
    }
  }
  return trace;
}

TraceSplit split(const Trace& records, const SplitRatios& ratios, std::uint64_t seed) {
  if (records.empty()) throw Error(ErrorCode::kDegenerateSplit, "cannot split an empty trace");
  const double sum = ratios.train + ratios.validation + ratios.test;
  if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0 || std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must be non-negative and sum to 1");
  }
  const std::size_t n = records.size();
  const auto n_train = static_cast<std::size_t>(std::llround(ratios.train * static_cast<double>(n)));
  const auto n_val = std::min(n - n_train,
      static_cast<std::size_t>(std::llround(ratios.validation * static_cast<double>(n))));
  const std::size_t n_test = n - n_train - n_val;
  if (n_train == 0 || n_val == 0 || n_test == 0) {
    throw Error(ErrorCode::kDegenerateSplit, "a split would be empty");
  }

  constexpr std::size_t kBlocks = 20;
  const std::size_t blocks = std::min(kBlocks, n);
  std::vector<std::size_t> order(blocks);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  // Concatenate blocks in shuffled order, cut at exact sizes, then restore
  // the original order inside each split.
  std::vector<std::uint8_t> owner(n);
  std::size_t position = 0;
  for (std::size_t b : order) {
    const std::size_t lo = b * n / blocks;
    const std::size_t hi = (b + 1) * n / blocks;
    for (std::size_t i = lo; i < hi; ++i, ++position) {
      owner[i] = position < n_train ? 0 : (position < n_train + n_val ? 1 : 2);
    }
  }
  TraceSplit out;
  Trace* targets[3] = {&out.train, &out.validation, &out.test};
  for (std::size_t i = 0; i < n; ++i) {
    Trace& t = *targets[owner[i]];
    TraceRecord rec = records[i];
    rec.segment_start = rec.segment_start || i == 0 || owner[i - 1] != owner[i];
    t.push_back(rec);
  }
  return out;
}

void append_segment(Trace& a, const Trace& b) {
  const std::size_t first = a.size();
  a.insert(a.end(), b.begin(), b.end());
  if (first < a.size()) a[first].segment_start = true;
}

}  // namespace seccan
