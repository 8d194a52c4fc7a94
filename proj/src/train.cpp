// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "seccan/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seccan/error.hpp"

namespace seccan::qnn {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;
constexpr double kActMomentum = 0.1;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

template <typename M>
void adam_update(M& param, const M& grad, M& m, M& v, double lr, double c1, double c2) {
  m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
  v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * grad.cwiseProduct(grad);
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kAdamEps);
}

FloatLayer to_float_layer(const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
  FloatLayer f;
  f.out = static_cast<std::size_t>(w.rows());
  f.in = static_cast<std::size_t>(w.cols());
  f.weights.resize(f.in * f.out);
  for (std::size_t j = 0; j < f.out; ++j) {
    for (std::size_t i = 0; i < f.in; ++i) f.weights[j * f.in + i] = w(j, i);
  }
  f.bias.assign(b.data(), b.data() + b.size());
  return f;
}

BatchNormStats bn_stats(const Eigen::VectorXd& gamma, const Eigen::VectorXd& beta,
                        const Eigen::VectorXd& mean, const Eigen::VectorXd& var) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return BatchNormStats{vec(gamma), vec(beta), vec(mean), vec(var), kBnEps};
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::kConfig, "epochs must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kConfig, "learning rate must be non-negative");
  }
  if (batch_size < 1) throw Error(ErrorCode::kConfig, "batch size must be at least 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorCode::kConfig, "dropout rate must be in [0, 1)");
  }
  if (patience < 0 || finetune_epochs < 0) {
    throw Error(ErrorCode::kConfig, "patience and finetune epochs must be non-negative");
  }
}

QatNetwork::QatNetwork(std::vector<std::size_t> dims, QatOptions options, std::uint64_t seed)
    : dims_(std::move(dims)), options_(options) {
  if (dims_.size() < 2) throw Error(ErrorCode::kInvalidArgument, "network needs two or more widths");
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(dims_[l]);
    const auto out = static_cast<Eigen::Index>(dims_[l + 1]);
    const bool hidden = l + 2 < dims_.size();
    // He initialisation for ReLU layers, Glorot for the logit.
    const double sd = hidden ? std::sqrt(2.0 / static_cast<double>(in))
                             : std::sqrt(2.0 / static_cast<double>(in + out));
    std::normal_distribution<double> normal(0.0, sd);
    Layer layer;
    layer.w = Eigen::MatrixXd::NullaryExpr(out, in, [&] { return normal(rng); });
    layer.b = Eigen::VectorXd::Zero(out);
    layer.gamma = Eigen::VectorXd::Ones(out);
    layer.beta = Eigen::VectorXd::Zero(out);
    layer.running_mean = Eigen::VectorXd::Zero(out);
    layer.running_var = Eigen::VectorXd::Ones(out);
    layer.input_seen = Eigen::VectorXd::Zero(in);
    layer.bn_active = hidden && options_.batch_norm;
    layers_.push_back(std::move(layer));
  }
  reset_adam();
}

void QatNetwork::reset_adam() {
  adam_t_ = 0;
  for (Layer& l : layers_) {
    l.mw = l.vw = Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols());
    l.mb = l.vb = l.mgamma = l.vgamma = l.mbeta = l.vbeta = Eigen::VectorXd::Zero(l.b.size());
    l.gw = Eigen::MatrixXd::Zero(l.w.rows(), l.w.cols());
    l.gb = l.ggamma = l.gbeta = Eigen::VectorXd::Zero(l.b.size());
  }
}

Eigen::MatrixXd QatNetwork::effective_weights(const Layer& layer) const {
  if (!options_.quantize_weights) return layer.w;
  const double max_abs = layer.w.cwiseAbs().maxCoeff();
  if (max_abs <= 0.0) return Eigen::MatrixXd::Zero(layer.w.rows(), layer.w.cols());
  const double scale = max_abs / kWeightMax;
  return layer.w.unaryExpr([scale](double w) { return quantize(w, scale, true) * scale; });
}

double QatNetwork::activation_scale(const Layer& layer) const {
  return layer.act_running_max > 0.0 ? layer.act_running_max / kActivationMax : 1.0;
}

Eigen::MatrixXd QatNetwork::forward(const Eigen::MatrixXd& x, bool training,
                                    std::mt19937_64* rng) {
  Eigen::MatrixXd a = x;
  const Eigen::Index n = x.rows();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    const bool hidden = l + 1 < layers_.size();
    layer.input = a;
    if (training) {
      layer.input_seen = layer.input_seen.cwiseMax(a.cwiseAbs().colwise().maxCoeff().transpose());
    }
    layer.wq = effective_weights(layer);
    Eigen::MatrixXd z = (a * layer.wq.transpose()).rowwise() + layer.b.transpose();
    if (!hidden) {
      a = z;
      break;
    }

    if (layer.bn_active) {
      Eigen::RowVectorXd mean, var;
      if (training) {
        mean = z.colwise().mean();
        var = (z.rowwise() - mean).array().square().colwise().mean();
        layer.running_mean = (1 - kBnMomentum) * layer.running_mean + kBnMomentum * mean.transpose();
        const double unbias = n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
        layer.running_var =
            (1 - kBnMomentum) * layer.running_var + kBnMomentum * unbias * var.transpose();
      } else {
        mean = layer.running_mean.transpose();
        var = layer.running_var.transpose();
      }
      layer.inv_std = (var.array() + kBnEps).rsqrt().transpose();
      layer.xhat = (z.rowwise() - mean).array().rowwise() * layer.inv_std.transpose().array();
      z = (layer.xhat.array().rowwise() * layer.gamma.transpose().array()).rowwise() +
          layer.beta.transpose().array();
    }

    layer.pre_relu = z;
    Eigen::MatrixXd r = z.cwiseMax(0.0);
    layer.grad_mask = (z.array() > 0.0).cast<double>();
    if (options_.quantize_activations) {
      if (training) {
        const double batch_max = r.maxCoeff();
        layer.act_running_max = layer.act_running_max > 0.0
                                    ? (1 - kActMomentum) * layer.act_running_max + kActMomentum * batch_max
                                    : batch_max;
      }
      const double s = activation_scale(layer);
      // clipped straight-through estimator
      layer.grad_mask.array() *= (r.array() < kActivationMax * s).cast<double>();
      r = r.unaryExpr([s](double v) { return quantize(v, s, false) * s; });
    }
    if (training && options_.dropout > 0.0) {
      std::bernoulli_distribution keep(1.0 - options_.dropout);
      const double inv_keep = 1.0 / (1.0 - options_.dropout);
      layer.drop_mask = Eigen::MatrixXd::NullaryExpr(r.rows(), r.cols(), [&] {
        return keep(*rng) ? inv_keep : 0.0;
      });
      r.array() *= layer.drop_mask.array();
    } else {
      layer.drop_mask = Eigen::MatrixXd::Ones(r.rows(), r.cols());
    }
    a = r;
  }
  return a;
}

double QatNetwork::loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& weight, bool training, std::mt19937_64* rng) {
  if (training && options_.dropout > 0.0 && rng == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "dropout requires a random source");
  }
  const Eigen::VectorXd z = forward(x, training, rng).col(0);
  const double total_weight = weight.sum();
  double sum = 0.0;
  last_dz_.resize(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    sum += weight(i) * (softplus(z(i)) - y(i) * z(i));
    last_dz_(i) = weight(i) * (sigmoid(z(i)) - y(i)) / total_weight;
  }
  return sum / total_weight;
}

void QatNetwork::backward() {
  Eigen::MatrixXd grad = last_dz_;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    Layer& layer = layers_[l];
    const bool hidden = l + 1 < layers_.size();
    if (hidden) {
      grad.array() *= layer.drop_mask.array() * layer.grad_mask.array();
      if (layer.bn_active) {
        const double n = static_cast<double>(grad.rows());
        layer.ggamma = (grad.array() * layer.xhat.array()).colwise().sum().transpose();
        layer.gbeta = grad.colwise().sum().transpose();
        const Eigen::MatrixXd dxhat = grad.array().rowwise() * layer.gamma.transpose().array();
        const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
        const Eigen::RowVectorXd sum_dxhat_xhat = (dxhat.array() * layer.xhat.array()).colwise().sum();
        Eigen::MatrixXd dz = (n * dxhat).rowwise() - sum_dxhat;
        dz -= (layer.xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
        dz = (dz.array().rowwise() * (layer.inv_std.transpose().array() / n)).matrix();
        grad = dz;
      }
    }
    layer.gw = grad.transpose() * layer.input;  // straight through the weight quantiser
    layer.gb = grad.colwise().sum().transpose();
    if (l > 0) grad = grad * layer.wq;
  }
}

void QatNetwork::adam_step(double learning_rate) {
  ++adam_t_;
  const double c1 = 1.0 - std::pow(kAdamBeta1, adam_t_);
  const double c2 = 1.0 - std::pow(kAdamBeta2, adam_t_);
  for (Layer& l : layers_) {
    adam_update(l.w, l.gw, l.mw, l.vw, learning_rate, c1, c2);
    adam_update(l.b, l.gb, l.mb, l.vb, learning_rate, c1, c2);
    if (l.bn_active) {
      adam_update(l.gamma, l.ggamma, l.mgamma, l.vgamma, learning_rate, c1, c2);
      adam_update(l.beta, l.gbeta, l.mbeta, l.vbeta, learning_rate, c1, c2);
    }
  }
}

Eigen::VectorXd QatNetwork::logits(const Eigen::MatrixXd& x) const {
  // forward() only writes caches; evaluate on a copy to stay const.
  QatNetwork copy = *this;
  return copy.forward(x, false, nullptr).col(0);
}

std::size_t QatNetwork::parameter_count() const {
  std::size_t count = 0;
  for (const Layer& l : layers_) {
    count += static_cast<std::size_t>(l.w.size() + l.b.size());
    if (l.bn_active) count += static_cast<std::size_t>(l.gamma.size() + l.beta.size());
  }
  return count;
}

double& QatNetwork::parameter(std::size_t index) {
  for (Layer& l : layers_) {
    const auto nw = static_cast<std::size_t>(l.w.size());
    if (index < nw) return l.w.data()[index];
    index -= nw;
    const auto nb = static_cast<std::size_t>(l.b.size());
    if (index < nb) return l.b(static_cast<Eigen::Index>(index));
    index -= nb;
    if (l.bn_active) {
      if (index < nb) return l.gamma(static_cast<Eigen::Index>(index));
      index -= nb;
      if (index < nb) return l.beta(static_cast<Eigen::Index>(index));
      index -= nb;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "parameter index out of range");
}

double QatNetwork::gradient(std::size_t index) const {
  for (const Layer& l : layers_) {
    const auto nw = static_cast<std::size_t>(l.w.size());
    if (index < nw) return l.gw.data()[index];
    index -= nw;
    const auto nb = static_cast<std::size_t>(l.b.size());
    if (index < nb) return l.gb(static_cast<Eigen::Index>(index));
    index -= nb;
    if (l.bn_active) {
      if (index < nb) return l.ggamma(static_cast<Eigen::Index>(index));
      index -= nb;
      if (index < nb) return l.gbeta(static_cast<Eigen::Index>(index));
      index -= nb;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "parameter index out of range");
}

std::vector<double> QatNetwork::parameters() const {
  std::vector<double> out;
  auto& self = const_cast<QatNetwork&>(*this);
  for (std::size_t i = 0; i < parameter_count(); ++i) out.push_back(self.parameter(i));
  return out;
}

FloatLayer QatNetwork::folded_float(const Layer& layer) const {
  FloatLayer f = to_float_layer(layer.w, layer.b);
  if (layer.input_seen.maxCoeff() > 0.0) {
    for (std::size_t i = 0; i < f.in; ++i) {
      if (layer.input_seen(static_cast<Eigen::Index>(i)) > 0.0) continue;
      for (std::size_t j = 0; j < f.out; ++j) f.weights[j * f.in + i] = 0.0;
    }
  }
  if (layer.bn_active) {
    f = fold_batchnorm(f, bn_stats(layer.gamma, layer.beta, layer.running_mean, layer.running_var));
  }
  return f;
}

void QatNetwork::fold_batchnorm_into_weights() {
  for (Layer& l : layers_) {
    if (!l.bn_active) continue;
    const FloatLayer folded = folded_float(l);
    for (Eigen::Index j = 0; j < l.w.rows(); ++j) {
      for (Eigen::Index i = 0; i < l.w.cols(); ++i) {
        l.w(j, i) = folded.weights[static_cast<std::size_t>(j * l.w.cols() + i)];
      }
      l.b(j) = folded.bias[static_cast<std::size_t>(j)];
    }
    l.bn_active = false;
  }
  options_.batch_norm = false;
  reset_adam();
}

QuantizedMlp QatNetwork::export_model() const {
  if (!std::equal(dims_.begin(), dims_.end(), kLayerDims.begin(), kLayerDims.end())) {
    throw Error(ErrorCode::kDimensionMismatch, "only the 20-64-32-1 detector can be exported");
  }
  std::vector<QuantLayer> out;
  double in_scale = kInputScale;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const FloatLayer f = folded_float(layer);
    const bool hidden = l + 1 < layers_.size();
    QuantLayer q = quantize_layer(f, in_scale, hidden ? activation_scale(layer) : 1.0);
    if (!hidden) q.act_scale = q.weight_scale * in_scale;
    in_scale = q.act_scale;
    out.push_back(std::move(q));
  }
  return QuantizedMlp(std::move(out));
}

Eigen::MatrixXd input_matrix(const std::vector<FeatureVector>& features) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(features.size()),
                    static_cast<Eigen::Index>(kFeatureBytes));
  for (std::size_t r = 0; r < features.size(); ++r) {
    for (std::size_t c = 0; c < kFeatureBytes; ++c) {
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          quantize_input_byte(features[r].bytes[c]) * kInputScale;
    }
  }
  return x;
}

double train_epoch(QatNetwork& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& weight, int batch_size, double learning_rate,
                   std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  double total = 0.0;
  std::size_t batches = 0;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < n; start += bs) {
    const std::size_t len = std::min(bs, n - start);
    // BN needs two or more rows; a trailing singleton batch is skipped.
    if (len < 2 && batches > 0) break;
    Eigen::MatrixXd xb(static_cast<Eigen::Index>(len), x.cols());
    Eigen::VectorXd yb(static_cast<Eigen::Index>(len)), wb(static_cast<Eigen::Index>(len));
    for (std::size_t k = 0; k < len; ++k) {
      const Eigen::Index row = order[start + k];
      xb.row(static_cast<Eigen::Index>(k)) = x.row(row);
      yb(static_cast<Eigen::Index>(k)) = y(row);
      wb(static_cast<Eigen::Index>(k)) = weight(row);
    }
    const double loss = net.loss(xb, yb, wb, true, &rng);
    if (!std::isfinite(loss)) throw Error(ErrorCode::kNonFinite, "training loss diverged");
    net.backward();
    net.adam_step(learning_rate);
    total += loss;
    ++batches;
  }
  return batches > 0 ? total / static_cast<double>(batches) : 0.0;
}

TrainResult train(const Dataset& train_set, const Dataset* validation, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.size() == 0 || train_set.labels.size() != train_set.size()) {
    throw Error(ErrorCode::kDegenerateData, "training set is empty or unlabeled");
  }
  std::size_t positives = 0;
  for (std::uint8_t label : train_set.labels) {
    if (label > 1) throw Error(ErrorCode::kDegenerateData, "labels must be 0 or 1");
    positives += label;
  }
  const std::size_t n = train_set.size();
  if (positives == 0 || positives == n) {
    throw Error(ErrorCode::kDegenerateData, "training set contains a single class");
  }

  const Eigen::MatrixXd x = input_matrix(train_set.features);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n)), w(static_cast<Eigen::Index>(n));
  const double w_pos = cfg.class_weighting ? static_cast<double>(n) / (2.0 * positives) : 1.0;
  const double w_neg = cfg.class_weighting ? static_cast<double>(n) / (2.0 * (n - positives)) : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    y(static_cast<Eigen::Index>(i)) = train_set.labels[i];
    w(static_cast<Eigen::Index>(i)) = train_set.labels[i] ? w_pos : w_neg;
  }

  Eigen::MatrixXd xv;
  Eigen::VectorXd yv, wv;
  const bool has_val = validation != nullptr && validation->size() > 0;
  if (has_val) {
    xv = input_matrix(validation->features);
    yv.resize(static_cast<Eigen::Index>(validation->size()));
    for (std::size_t i = 0; i < validation->size(); ++i) {
      yv(static_cast<Eigen::Index>(i)) = validation->labels[i];
    }
    wv = Eigen::VectorXd::Ones(yv.size());
  }

  QatOptions options;
  options.dropout = cfg.dropout_rate;
  QatNetwork net(std::vector<std::size_t>(kLayerDims.begin(), kLayerDims.end()), options, cfg.seed);
  std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);

  TrainResult result;
  auto evaluate = [&](QatNetwork& model, EpochLog& entry) {
    if (!has_val) return;
    entry.val_loss = model.loss(xv, yv, wv, false);
    const Eigen::VectorXd z = model.logits(xv);
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) correct += (z(i) > 0.0) == (yv(i) > 0.5);
    entry.val_accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(z.size());
  };

  QatNetwork best = net;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch;
    entry.phase = "train";
    entry.train_loss = train_epoch(net, x, y, w, cfg.batch_size, cfg.learning_rate, rng);
    evaluate(net, entry);
    result.log.push_back(entry);
    if (!has_val) continue;
    if (entry.val_loss < best_loss) {
      best_loss = entry.val_loss;
      best = net;
      stale = 0;
    } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
      break;
    }
  }
  if (has_val) net = best;

  net.fold_batchnorm_into_weights();
  for (int epoch = 1; epoch <= cfg.finetune_epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch;
    entry.phase = "finetune";
    entry.train_loss = train_epoch(net, x, y, w, cfg.batch_size, cfg.learning_rate, rng);
    evaluate(net, entry);
    result.log.push_back(entry);
  }
  result.model = net.export_model();
  return result;
}

}  // namespace seccan::qnn
