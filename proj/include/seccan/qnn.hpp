// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "seccan/features.hpp"

namespace seccan::qnn {

constexpr int kWeightMin = -8;
constexpr int kWeightMax = 7;
constexpr int kActivationMax = 15;

/// Layer widths of the detector: 20 input bytes, two hidden layers, one logit.
constexpr std::array<std::size_t, 4> kLayerDims = {kFeatureBytes, 64, 32, 1};

/// Input bytes are mapped to [0, 1] and quantised to 4-bit unsigned codes
/// with this scale.
constexpr double kInputScale = 1.0 / 15.0;

/// Uniform 4-bit quantiser: round(x / scale) with ties to even, saturated to
/// [-8, 7] (signed) or [0, 15] (unsigned).
int quantize(double x, double scale, bool is_signed);
inline double dequantize(int q, double scale) { return q * scale; }

/// Input byte -> 4-bit activation code, integer form of
/// quantize(b / 255, kInputScale, false).
constexpr std::uint8_t quantize_input_byte(std::uint8_t b) {
  return static_cast<std::uint8_t>((b + 8) / 17);
}

struct QuantLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<std::int8_t> weights;  // row-major [out][in], each in [-8, 7]
  std::vector<std::int32_t> bias;    // accumulator domain (weight_scale * in_scale)
  double weight_scale = 1.0;
  /// Output activation scale for hidden layers; for the final layer, the
  /// scale that dequantises the output accumulator.
  double act_scale = 1.0;
};

/// Integer-only 4-bit MLP 20 -> 64 -> 32 -> 1 with quantised ReLU between
/// layers. Construction checks every invariant and throws:
/// Error(kDimensionMismatch) for wrong widths, Error(kInvalidArgument) for
/// out-of-range weights or non-positive scales.
class QuantizedMlp {
 public:
  explicit QuantizedMlp(std::vector<QuantLayer> layers);

  /// All weights and biases zero, unit scales.
  static QuantizedMlp zeros();

  const std::vector<QuantLayer>& layers() const noexcept { return layers_; }

  /// Output-layer accumulator (pre-activation in integer units).
  std::int64_t output_accumulator(const FeatureVector& x) const;
  /// Hidden activation codes of each hidden layer, for inspection.
  std::vector<std::vector<std::uint8_t>> hidden_activations(const FeatureVector& x) const;
  /// sigmoid(accumulator * output scale).
  double probability(const FeatureVector& x) const;
  /// probability > 0.5, decided on the integer accumulator.
  bool is_attack(const FeatureVector& x) const { return output_accumulator(x) > 0; }

  friend bool operator==(const QuantizedMlp& a, const QuantizedMlp& b);

 private:
  struct Requant {
    std::int64_t multiplier = 0;  // Q31 mantissa
    int shift = 0;
  };

  std::vector<std::uint8_t> run_hidden(std::size_t layer,
                                       std::span<const std::uint8_t> input) const;

  std::vector<QuantLayer> layers_;
  std::vector<Requant> requant_;
};

/// Real-valued layer before quantisation, row-major [out][in].
struct FloatLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;
};

struct BatchNormStats {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> mean;
  std::vector<double> var;
  double eps = 1e-5;
};

/// Absorbs per-channel normalisation into the layer:
/// w' = w * gamma / sigma, b' = (b - mean) * gamma / sigma + beta with
/// sigma = sqrt(var + eps). Throws Error(kZeroVariance) when var + eps <= 0.
FloatLayer fold_batchnorm(const FloatLayer& layer, const BatchNormStats& bn);

/// Symmetric per-tensor weight quantisation (scale = max|w| / 7) and int32
/// bias in the accumulator domain.
QuantLayer quantize_layer(const FloatLayer& layer, double input_scale, double act_scale);

}  // namespace seccan::qnn
