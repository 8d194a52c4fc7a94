// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "seccan/error.hpp"
#include "seccan/qnn.hpp"
#include "seccan/train.hpp"

using namespace seccan;
using namespace seccan::qnn;

namespace {

QuantizedMlp random_model(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> w(kWeightMin, kWeightMax);
  std::uniform_int_distribution<int> b(-200, 200);
  std::uniform_real_distribution<double> scale(0.01, 0.2);
  std::vector<QuantLayer> layers;
  for (std::size_t l = 0; l + 1 < kLayerDims.size(); ++l) {
    QuantLayer q;
    q.in = kLayerDims[l];
    q.out = kLayerDims[l + 1];
    for (std::size_t k = 0; k < q.in * q.out; ++k) q.weights.push_back(static_cast<std::int8_t>(w(rng)));
    for (std::size_t k = 0; k < q.out; ++k) q.bias.push_back(b(rng));
    q.weight_scale = scale(rng);
    q.act_scale = scale(rng) * 2.0;
    layers.push_back(std::move(q));
  }
  // the last act_scale dequantises the output accumulator
  layers[2].act_scale = layers[2].weight_scale * layers[1].act_scale;
  return QuantizedMlp(std::move(layers));
}

FeatureVector random_input(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> byte(0, 255);
  FeatureVector f;
  for (auto& b : f.bytes) b = static_cast<std::uint8_t>(byte(rng));
  f.valid = true;
  return f;
}

}  // namespace

TEST_CASE("quantize rounds half to even and saturates") {
  CHECK(quantize(0.0, 0.37, true) == 0);
  CHECK(quantize(100.0, 0.1, true) == 7);
  CHECK(quantize(-100.0, 0.1, true) == -8);
  CHECK(quantize(100.0, 0.1, false) == 15);
  CHECK(quantize(-1.0, 0.1, false) == 0);
  // exactly representable ties
  CHECK(quantize(-1.75, 0.5, true) == -4);
  CHECK(quantize(-1.25, 0.5, true) == -2);
  CHECK(quantize(1.25, 0.5, true) == 2);
  CHECK(quantize(0.75, 0.5, false) == 2);
  CHECK(quantize(0.25, 0.5, false) == 0);
  // -0.35 / 0.1 evaluates to -3.4999999999999996 in binary floating point
  CHECK(quantize(-0.35, 0.1, true) == -3);
}

TEST_CASE("quantization error is at most half a step") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> scale(1e-3, 2.0), unit(0.0, 1.0);
  for (int i = 0; i < 100000; ++i) {
    const double s = scale(rng);
    const double xs = (unit(rng) * 15.0 - 8.0) * s;  // inside [-8s, 7s]
    REQUIRE(std::abs(dequantize(quantize(xs, s, true), s) - xs) <= s / 2 + 1e-12);
    const double xu = unit(rng) * 15.0 * s;
    REQUIRE(std::abs(dequantize(quantize(xu, s, false), s) - xu) <= s / 2 + 1e-12);
  }
}

TEST_CASE("input byte codes") {
  CHECK(quantize_input_byte(0) == 0);
  CHECK(quantize_input_byte(8) == 0);
  CHECK(quantize_input_byte(9) == 1);
  CHECK(quantize_input_byte(255) == 15);
  for (int b = 0; b < 256; ++b) {
    CHECK(quantize_input_byte(static_cast<std::uint8_t>(b)) == quantize(b / 255.0, kInputScale, false));
  }
}

TEST_CASE("all-zero model outputs one half") {
  const QuantizedMlp m = QuantizedMlp::zeros();
  std::mt19937_64 rng(1);
  CHECK(m.probability(FeatureVector{}) == 0.5);
  CHECK(m.probability(random_input(rng)) == 0.5);
  CHECK_FALSE(m.is_attack(random_input(rng)));
}

TEST_CASE("zero final weights give a constant output") {
  std::mt19937_64 rng(2);
  std::vector<QuantLayer> layers = random_model(rng).layers();
  std::fill(layers[2].weights.begin(), layers[2].weights.end(), 0);
  layers[2].bias[0] = 37;
  const QuantizedMlp m(layers);
  const double expected = 1.0 / (1.0 + std::exp(-37 * layers[2].act_scale));
  for (int i = 0; i < 50; ++i) CHECK(m.probability(random_input(rng)) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("integer forward pass agrees with a real-valued reference") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const QuantizedMlp m = random_model(rng);
    const auto& L = m.layers();
    for (int k = 0; k < 20; ++k) {
      const FeatureVector f = random_input(rng);
      // reference on dequantised weights; activations clipped but not rounded
      std::vector<double> x(kFeatureBytes);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = quantize_input_byte(f.bytes[i]) * kInputScale;
      double in_scale = kInputScale;
      double in_err = 0.0;  // bound on |integer path - reference| per input element
      const auto hidden = m.hidden_activations(f);
      for (std::size_t l = 0; l < 2; ++l) {
        std::vector<double> y(L[l].out);
        double row_bound = 0.0;
        for (std::size_t j = 0; j < L[l].out; ++j) {
          double acc = L[l].bias[j] * L[l].weight_scale * in_scale;
          double abs_w = 0.0;
          for (std::size_t i = 0; i < L[l].in; ++i) {
            const double w = L[l].weights[j * L[l].in + i] * L[l].weight_scale;
            acc += w * x[i];
            abs_w += std::abs(w);
          }
          y[j] = std::clamp(acc, 0.0, kActivationMax * L[l].act_scale);
          row_bound = std::max(row_bound, abs_w * in_err);
        }
        const double bound = row_bound + L[l].act_scale / 2 + 1e-9;
        for (std::size_t j = 0; j < L[l].out; ++j) {
          REQUIRE(std::abs(hidden[l][j] * L[l].act_scale - y[j]) <= bound);
        }
        x = y;
        in_err = bound;
        in_scale = L[l].act_scale;
      }
      double z = L[2].bias[0] * L[2].act_scale;
      double abs_w = 0.0;
      for (std::size_t i = 0; i < L[2].in; ++i) {
        const double w = L[2].weights[i] * L[2].weight_scale;
        z += w * x[i];
        abs_w += std::abs(w);
      }
      const double got = static_cast<double>(m.output_accumulator(f)) * L[2].act_scale;
      REQUIRE(std::abs(got - z) <= abs_w * in_err + 1e-9);
    }
  }
}

TEST_CASE("first layer is exact for power-of-two scales") {
  std::mt19937_64 rng(21);
  std::vector<QuantLayer> layers = random_model(rng).layers();
  layers[0].weight_scale = 0.25;
  layers[0].act_scale = 0.125;
  const QuantizedMlp m(layers);
  for (int k = 0; k < 200; ++k) {
    const FeatureVector f = random_input(rng);
    const auto h = m.hidden_activations(f)[0];
    for (std::size_t j = 0; j < 64; ++j) {
      std::int64_t acc = layers[0].bias[j];
      for (std::size_t i = 0; i < 20; ++i) acc += layers[0].weights[j * 20 + i] * quantize_input_byte(f.bytes[i]);
      const double real = static_cast<double>(acc) * 0.25 / 15.0;
      REQUIRE(h[j] == quantize(real, 0.125, false));
    }
  }
}

TEST_CASE("model validation") {
  std::mt19937_64 rng(3);
  auto layers = random_model(rng).layers();
  auto bad = layers;
  bad[1].weights[0] = 9;
  CHECK_THROWS_AS(QuantizedMlp{bad}, Error);
  bad = layers;
  bad[0].act_scale = 0.0;
  CHECK_THROWS_AS(QuantizedMlp{bad}, Error);
  bad = layers;
  bad[2].out = 2;
  bad[2].weights.resize(64);
  bad[2].bias.resize(2);
  try {
    QuantizedMlp m(bad);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDimensionMismatch);
  }
  bad = layers;
  bad.pop_back();
  CHECK_THROWS_AS(QuantizedMlp{bad}, Error);
}

TEST_CASE("batch-norm folding identities") {
  FloatLayer layer{3, 2, {0.5, -1.0, 2.0, 0.25, 0.0, -0.75}, {0.1, -0.2}};
  BatchNormStats id{{1, 1}, {0, 0}, {0, 0}, {1, 1}, 0.0};
  const FloatLayer same = fold_batchnorm(layer, id);
  CHECK(same.weights == layer.weights);
  CHECK(same.bias == layer.bias);

  BatchNormStats twice{{2, 2}, {0, 0}, {0, 0}, {1, 1}, 0.0};
  const FloatLayer doubled = fold_batchnorm(layer, twice);
  for (std::size_t i = 0; i < layer.weights.size(); ++i) CHECK(doubled.weights[i] == 2 * layer.weights[i]);
  for (std::size_t i = 0; i < layer.bias.size(); ++i) CHECK(doubled.bias[i] == 2 * layer.bias[i]);

  BatchNormStats zero{{1, 1}, {0, 0}, {0, 0}, {0, 1}, 0.0};
  try {
    fold_batchnorm(layer, zero);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kZeroVariance);
  }
}

TEST_CASE("folded layer matches normalise-then-quantise within one step") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 0.5);
  std::uniform_real_distribution<double> pos(0.5, 2.0);
  FloatLayer layer{20, 64, {}, {}};
  for (std::size_t i = 0; i < 20 * 64; ++i) layer.weights.push_back(normal(rng));
  for (std::size_t i = 0; i < 64; ++i) layer.bias.push_back(normal(rng));
  BatchNormStats bn;
  for (std::size_t j = 0; j < 64; ++j) {
    bn.gamma.push_back(pos(rng));
    bn.beta.push_back(normal(rng));
    bn.mean.push_back(normal(rng));
    bn.var.push_back(pos(rng));
  }
  const FloatLayer folded = fold_batchnorm(layer, bn);
  const double act_scale = 0.2;
  std::vector<QuantLayer> layers = QuantizedMlp::zeros().layers();
  layers[0] = quantize_layer(folded, kInputScale, act_scale);
  const QuantizedMlp m(layers);
  const double ws = layers[0].weight_scale;
  for (int k = 0; k < 100; ++k) {
    const FeatureVector f = random_input(rng);
    const auto h = m.hidden_activations(f)[0];
    for (std::size_t j = 0; j < 64; ++j) {
      double pre = layer.bias[j];
      double abs_x = 0.0;
      for (std::size_t i = 0; i < 20; ++i) {
        const double x = quantize_input_byte(f.bytes[i]) * kInputScale;
        pre += layer.weights[j * 20 + i] * x;
        abs_x += x;
      }
      const double y = bn.gamma[j] * (pre - bn.mean[j]) / std::sqrt(bn.var[j] + bn.eps) + bn.beta[j];
      const double ref = std::clamp(y, 0.0, 15 * act_scale);
      // weight rounding contributes at most ws/2 per input
      const double tol = act_scale + ws / 2 * abs_x + ws * kInputScale;
      REQUIRE(std::abs(h[j] * act_scale - ref) <= tol);
      REQUIRE(std::abs(h[j] - quantize(ref, act_scale, false)) <= 1 + static_cast<int>(std::ceil((ws / 2 * abs_x + ws * kInputScale) / act_scale)));
    }
  }
}

TEST_CASE("scaling the final layer does not change verdicts") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> normal(0.0, 1.0);
  FloatLayer last{32, 1, {}, {0.3}};
  for (int i = 0; i < 32; ++i) last.weights.push_back(normal(rng));
  std::vector<QuantLayer> layers = random_model(rng).layers();
  layers[2] = quantize_layer(last, layers[1].act_scale, 1.0);
  layers[2].act_scale = layers[2].weight_scale * layers[1].act_scale;
  FloatLayer scaled = last;
  for (auto& w : scaled.weights) w *= 3.7;
  scaled.bias[0] *= 3.7;
  std::vector<QuantLayer> layers2 = layers;
  layers2[2] = quantize_layer(scaled, layers[1].act_scale, 1.0);
  layers2[2].act_scale = layers2[2].weight_scale * layers[1].act_scale;
  const QuantizedMlp a(layers), b(layers2);
  for (int k = 0; k < 500; ++k) {
    const FeatureVector f = random_input(rng);
    if (std::abs(a.output_accumulator(f)) > 1) REQUIRE(a.is_attack(f) == b.is_attack(f));
  }
}

TEST_CASE("analytic gradients match central differences") {
  QatOptions opt;
  opt.quantize_weights = false;
  opt.quantize_activations = false;
  opt.batch_norm = true;
  opt.dropout = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    QatNetwork net({2, 2, 1}, opt, seed);
    Eigen::MatrixXd x(6, 2);
    x << 0.1, 0.9, 0.4, 0.3, 0.8, 0.2, 0.5, 0.7, 0.05, 0.6, 0.95, 0.45;
    Eigen::VectorXd y(6), w(6);
    y << 1, 0, 1, 0, 0, 1;
    w << 1.0, 0.5, 1.0, 2.0, 1.0, 1.5;
    net.loss(x, y, w, true);
    net.backward();
    const std::size_t n = net.parameter_count();
    CHECK(n == 2 * 2 + 2 + 2 + 2 + 2 + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double analytic = net.gradient(i);
      const double p0 = net.parameter(i);
      const double h = 1e-6;
      net.parameter(i) = p0 + h;
      const double up = net.loss(x, y, w, true);
      net.parameter(i) = p0 - h;
      const double down = net.loss(x, y, w, true);
      net.parameter(i) = p0;
      const double numeric = (up - down) / (2 * h);
      INFO("parameter " << i << " analytic " << analytic << " numeric " << numeric);
      // biases ahead of batch-norm have an exactly zero gradient; allow for
      // the rounding noise of the difference quotient there
      CHECK(std::abs(analytic - numeric) <= 1e-5 * std::max(std::abs(analytic), std::abs(numeric)) + 1e-9);
    }
  }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  QatNetwork net({20, 64, 32, 1}, QatOptions{}, 5);
  std::mt19937_64 rng(5);
  std::vector<FeatureVector> f;
  std::vector<double> labels;
  for (int i = 0; i < 300; ++i) {
    f.push_back(random_input(rng));
    labels.push_back(i % 2);
  }
  const Eigen::MatrixXd x = input_matrix(f);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(y.size());
  const auto before = net.parameters();
  for (int e = 0; e < 3; ++e) train_epoch(net, x, y, w, 64, 0.0, rng);
  CHECK(net.parameters() == before);
}

TEST_CASE("training separates a linearly separable set") {
  // label = first byte above 127; the second byte is noise
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> byte(0, 255);
  Dataset ds;
  while (ds.size() < 2000) {
    const int a = byte(rng);
    if (a >= 112 && a <= 143) continue;  // margin around the threshold
    FeatureVector f;
    f.bytes[0] = static_cast<std::uint8_t>(a);
    f.bytes[1] = static_cast<std::uint8_t>(byte(rng));
    ds.features.push_back(f);
    ds.labels.push_back(a > 127 ? 1 : 0);
  }
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 3e-3;
  cfg.batch_size = 64;
  cfg.patience = 0;
  cfg.finetune_epochs = 2;
  const TrainResult r = train(ds, nullptr, cfg);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) correct += r.model.is_attack(ds.features[i]) == (ds.labels[i] == 1);
  CHECK(static_cast<double>(correct) / static_cast<double>(ds.size()) >= 0.99);
  CHECK(r.log.size() == 52);
}

TEST_CASE("training rejects degenerate data") {
  Dataset empty;
  CHECK_THROWS_AS(train(empty, nullptr, TrainConfig{}), Error);
  Dataset one_class;
  one_class.features.assign(10, FeatureVector{});
  one_class.labels.assign(10, 1);
  try {
    train(one_class, nullptr, TrainConfig{});
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateData);
  }
  TrainConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = TrainConfig{};
  bad.dropout_rate = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("training is deterministic per seed") {
  std::mt19937_64 rng(7);
  Dataset ds;
  for (int i = 0; i < 600; ++i) {
    FeatureVector f = random_input(rng);
    ds.features.push_back(f);
    ds.labels.push_back(f.bytes[3] > 128 ? 1 : 0);
  }
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 1e-3;
  const TrainResult a = train(ds, &ds, cfg);
  const TrainResult b = train(ds, &ds, cfg);
  CHECK(a.model == b.model);
}
