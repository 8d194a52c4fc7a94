// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "seccan/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "seccan/error.hpp"

namespace seccan::qnn {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'Q', 'W'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::kDimensionMismatch, "weight file shorter than its declared layers");
    }
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      ::crc32(::crc32(0L, Z_NULL, 0), bytes.data(), static_cast<uInt>(bytes.size())));
}

std::int8_t sign_extend_nibble(std::uint8_t nibble) {
  return static_cast<std::int8_t>((nibble & 0x8) ? static_cast<int>(nibble) - 16 : nibble);
}

}  // namespace

std::vector<std::uint8_t> serialize_layers(std::span<const QuantLayer> layers) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kWeightFormatVersion);
  w.u8(static_cast<std::uint8_t>(layers.size()));
  for (const QuantLayer& layer : layers) {
    w.u16(static_cast<std::uint16_t>(layer.in));
    w.u16(static_cast<std::uint16_t>(layer.out));
    w.f64(layer.weight_scale);
    w.f64(layer.act_scale);
    for (std::int32_t b : layer.bias) w.u32(static_cast<std::uint32_t>(b));
    for (std::size_t i = 0; i < layer.weights.size(); i += 2) {
      const auto lo = static_cast<std::uint8_t>(layer.weights[i] & 0x0F);
      const auto hi = i + 1 < layer.weights.size()
                          ? static_cast<std::uint8_t>(layer.weights[i + 1] & 0x0F)
                          : std::uint8_t{0};
      w.u8(static_cast<std::uint8_t>(lo | (hi << 4)));
    }
  }
  w.u32(crc32_of(w.bytes()));
  return std::move(w.bytes());
}

std::vector<std::uint8_t> export_weights(const QuantizedMlp& model) {
  return serialize_layers(model.layers());
}

QuantizedMlp import_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic + 2 + 1 + 4) {
    throw Error(ErrorCode::kChecksumMismatch, "weight file too short");
  }
  const auto body = bytes.first(bytes.size() - 4);
  Reader trailer(bytes.last(4));
  if (trailer.u32() != crc32_of(body)) {
    throw Error(ErrorCode::kChecksumMismatch, "weight file checksum mismatch");
  }

  Reader r(body);
  const auto magic = r.take(sizeof kMagic);
  if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::kVersionMismatch, "not a SCQW weight file");
  }
  const std::uint16_t version = r.u16();
  if (version != kWeightFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "unsupported weight format version " + std::to_string(version));
  }
  const std::uint8_t count = r.u8();
  if (count != kLayerDims.size() - 1) {
    throw Error(ErrorCode::kDimensionMismatch, "expected 3 layers, file declares " +
                                                   std::to_string(count));
  }
  std::vector<QuantLayer> layers;
  for (std::uint8_t l = 0; l < count; ++l) {
    QuantLayer layer;
    layer.in = r.u16();
    layer.out = r.u16();
    if (layer.in != kLayerDims[l] || layer.out != kLayerDims[l + 1u]) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "layer " + std::to_string(l) + " declares " + std::to_string(layer.in) + "x" +
                      std::to_string(layer.out));
    }
    layer.weight_scale = r.f64();
    layer.act_scale = r.f64();
    layer.bias.resize(layer.out);
    for (auto& b : layer.bias) b = static_cast<std::int32_t>(r.u32());
    const std::size_t n = layer.in * layer.out;
    const auto packed = r.take((n + 1) / 2);
    layer.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t byte = packed[i / 2];
      layer.weights[i] = sign_extend_nibble(i % 2 == 0 ? (byte & 0x0F) : (byte >> 4));
    }
    layers.push_back(std::move(layer));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kDimensionMismatch, "trailing bytes after the last layer");
  }
  return QuantizedMlp(std::move(layers));
}

void save_weights(const QuantizedMlp& model, const std::string& path) {
  const auto bytes = export_weights(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path);
}

QuantizedMlp load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return import_weights(bytes);
}

}  // namespace seccan::qnn
