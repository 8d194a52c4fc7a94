// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "seccan/qnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "seccan/error.hpp"

namespace seccan::qnn {

namespace {

double round_half_even(double v) {
  const double floor_v = std::floor(v);
  const double frac = v - floor_v;
  if (frac > 0.5) return floor_v + 1.0;
  if (frac < 0.5) return floor_v;
  return std::fmod(floor_v, 2.0) == 0.0 ? floor_v : floor_v + 1.0;
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

// a * 2^-shift, ties to even; arithmetic shift floors toward -inf.
std::int64_t rounding_shift(std::int64_t value, int shift) {
  if (shift <= 0) return value;
  const std::int64_t floor_q = value >> shift;
  const std::int64_t rem = value - (floor_q << shift);
  const std::int64_t half = std::int64_t{1} << (shift - 1);
  if (rem > half || (rem == half && (floor_q & 1) != 0)) return floor_q + 1;
  return floor_q;
}

}  // namespace

int quantize(double x, double scale, bool is_signed) {
  const int lo = is_signed ? kWeightMin : 0;
  const int hi = is_signed ? kWeightMax : kActivationMax;
  const double v = x / scale;
  if (std::isnan(v)) return 0;
  const double r = round_half_even(std::clamp(v, -1e9, 1e9));
  return static_cast<int>(std::clamp(r, static_cast<double>(lo), static_cast<double>(hi)));
}

QuantizedMlp::QuantizedMlp(std::vector<QuantLayer> layers) : layers_(std::move(layers)) {
  if (layers_.size() != kLayerDims.size() - 1) {
    throw Error(ErrorCode::kDimensionMismatch, "detector must have exactly 3 layers");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const QuantLayer& layer = layers_[l];
    if (layer.in != kLayerDims[l] || layer.out != kLayerDims[l + 1]) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "layer " + std::to_string(l) + " is " + std::to_string(layer.in) + "x" +
                      std::to_string(layer.out) + ", expected " +
                      std::to_string(kLayerDims[l]) + "x" + std::to_string(kLayerDims[l + 1]));
    }
    if (layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out) {
      throw Error(ErrorCode::kDimensionMismatch, "weight or bias array size mismatch");
    }
    for (std::int8_t w : layer.weights) {
      if (w < kWeightMin || w > kWeightMax) {
        throw Error(ErrorCode::kInvalidArgument, "weight outside the 4-bit signed range");
      }
    }
    if (!positive_finite(layer.weight_scale) || !positive_finite(layer.act_scale)) {
      throw Error(ErrorCode::kInvalidArgument, "scales must be positive and finite");
    }
  }

  // Fixed-point requantisation multipliers for the hidden layers.
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    const double in_scale = l == 0 ? kInputScale : layers_[l - 1].act_scale;
    const double m = layers_[l].weight_scale * in_scale / layers_[l].act_scale;
    int exp = 0;
    const double frac = std::frexp(m, &exp);
    Requant r;
    r.multiplier = std::llround(std::ldexp(frac, 31));
    r.shift = 31 - exp;
    if (r.multiplier == (std::int64_t{1} << 31)) {
      r.multiplier >>= 1;
      --r.shift;
    }
    if (r.shift > 62) {
      r.multiplier = 0;
      r.shift = 0;
    }
    requant_.push_back(r);
  }
}

QuantizedMlp QuantizedMlp::zeros() {
  std::vector<QuantLayer> layers;
  for (std::size_t l = 0; l + 1 < kLayerDims.size(); ++l) {
    QuantLayer q;
    q.in = kLayerDims[l];
    q.out = kLayerDims[l + 1];
    q.weights.assign(q.in * q.out, 0);
    q.bias.assign(q.out, 0);
    layers.push_back(std::move(q));
  }
  return QuantizedMlp(std::move(layers));
}

std::vector<std::uint8_t> QuantizedMlp::run_hidden(std::size_t l,
                                                   std::span<const std::uint8_t> input) const {
  const QuantLayer& layer = layers_[l];
  const Requant& r = requant_[l];
  std::vector<std::uint8_t> out(layer.out);
  for (std::size_t j = 0; j < layer.out; ++j) {
    const std::int8_t* row = layer.weights.data() + j * layer.in;
    std::int64_t acc = layer.bias[j];
    for (std::size_t i = 0; i < layer.in; ++i) acc += std::int64_t{row[i]} * input[i];
    std::int64_t q = 0;
    if (acc > 0) {
      if (r.shift < 0) {
        q = kActivationMax;
      } else {
        q = rounding_shift(acc * r.multiplier, r.shift);
      }
    }
    out[j] = static_cast<std::uint8_t>(std::clamp<std::int64_t>(q, 0, kActivationMax));
  }
  return out;
}

std::vector<std::vector<std::uint8_t>> QuantizedMlp::hidden_activations(
    const FeatureVector& x) const {
  std::vector<std::uint8_t> input(kFeatureBytes);
  std::transform(x.bytes.begin(), x.bytes.end(), input.begin(), quantize_input_byte);
  std::vector<std::vector<std::uint8_t>> out;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    input = run_hidden(l, input);
    out.push_back(input);
  }
  return out;
}

std::int64_t QuantizedMlp::output_accumulator(const FeatureVector& x) const {
  std::vector<std::uint8_t> act(kFeatureBytes);
  std::transform(x.bytes.begin(), x.bytes.end(), act.begin(), quantize_input_byte);
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) act = run_hidden(l, act);
  const QuantLayer& last = layers_.back();
  std::int64_t acc = last.bias[0];
  for (std::size_t i = 0; i < last.in; ++i) acc += std::int64_t{last.weights[i]} * act[i];
  return acc;
}

double QuantizedMlp::probability(const FeatureVector& x) const {
  const double z = static_cast<double>(output_accumulator(x)) * layers_.back().act_scale;
  return 1.0 / (1.0 + std::exp(-z));
}

bool operator==(const QuantizedMlp& a, const QuantizedMlp& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    const QuantLayer& x = a.layers_[l];
    const QuantLayer& y = b.layers_[l];
    if (x.in != y.in || x.out != y.out || x.weights != y.weights || x.bias != y.bias ||
        x.weight_scale != y.weight_scale || x.act_scale != y.act_scale) {
      return false;
    }
  }
  return true;
}

FloatLayer fold_batchnorm(const FloatLayer& layer, const BatchNormStats& bn) {
  if (bn.gamma.size() != layer.out || bn.beta.size() != layer.out ||
      bn.mean.size() != layer.out || bn.var.size() != layer.out) {
    throw Error(ErrorCode::kDimensionMismatch, "batch-norm statistics do not match layer width");
  }
  FloatLayer folded = layer;
  for (std::size_t j = 0; j < layer.out; ++j) {
    const double var = bn.var[j] + bn.eps;
    if (!(var > 0.0)) {
      throw Error(ErrorCode::kZeroVariance,
                  "batch-norm channel " + std::to_string(j) + " has zero variance");
    }
    const double k = bn.gamma[j] / std::sqrt(var);
    for (std::size_t i = 0; i < layer.in; ++i) folded.weights[j * layer.in + i] *= k;
    folded.bias[j] = (layer.bias[j] - bn.mean[j]) * k + bn.beta[j];
  }
  return folded;
}

QuantLayer quantize_layer(const FloatLayer& layer, double input_scale, double act_scale) {
  if (!positive_finite(input_scale) || !positive_finite(act_scale)) {
    throw Error(ErrorCode::kInvalidArgument, "scales must be positive and finite");
  }
  double max_abs = 0.0;
  for (double w : layer.weights) max_abs = std::max(max_abs, std::abs(w));
  if (!std::isfinite(max_abs)) throw Error(ErrorCode::kNonFinite, "non-finite weight");

  QuantLayer q;
  q.in = layer.in;
  q.out = layer.out;
  q.weight_scale = max_abs > 0.0 ? max_abs / kWeightMax : 1.0;
  q.act_scale = act_scale;
  q.weights.reserve(layer.weights.size());
  for (double w : layer.weights) {
    q.weights.push_back(static_cast<std::int8_t>(quantize(w, q.weight_scale, true)));
  }
  const double acc_scale = q.weight_scale * input_scale;
  constexpr double kI32Max = std::numeric_limits<std::int32_t>::max();
  for (double b : layer.bias) {
    const double v = std::clamp(std::nearbyint(b / acc_scale), -kI32Max, kI32Max);
    q.bias.push_back(static_cast<std::int32_t>(v));
  }
  return q;
}

}  // namespace seccan::qnn
