// Copyright 2026 The SecCAN-sim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "seccan/features.hpp"
#include "seccan/qnn.hpp"

namespace seccan::qnn {

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 1e-4;
  int batch_size = 256;
  double dropout_rate = 0.2;
  std::uint64_t seed = 1;
  /// Epochs without validation-loss improvement before stopping; 0 disables.
  int patience = 5;
  /// QAT epochs run after batch-norm has been folded into the weights.
  int finetune_epochs = 2;
  bool class_weighting = true;

  void validate() const;
};

struct Dataset {
  std::vector<FeatureVector> features;
  std::vector<std::uint8_t> labels;  // 1 = attack

  std::size_t size() const noexcept { return features.size(); }
};

struct EpochLog {
  int epoch = 0;
  std::string phase;  // "train" or "finetune"
  double train_loss = 0;
  double val_loss = 0;
  double val_accuracy = 0;
};

struct QatOptions {
  bool quantize_weights = true;
  bool quantize_activations = true;
  bool batch_norm = true;
  double dropout = 0.0;
};

/// Real-valued master network trained with fake quantisation in the forward
/// pass and straight-through gradients in the backward pass. Hidden layers
/// are Linear -> BatchNorm -> ReLU -> 4-bit activation quantiser -> dropout;
/// the last layer is Linear and produces the logit.
class QatNetwork {
 public:
  QatNetwork(std::vector<std::size_t> dims, QatOptions options, std::uint64_t seed);

  /// Weighted binary cross-entropy of the batch. In training mode batch
  /// statistics are used and running statistics updated; rng drives dropout
  /// and may be null when dropout is 0.
  double loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& weight,
              bool training, std::mt19937_64* rng = nullptr);
  /// Gradients of the last training-mode loss() call.
  void backward();
  void adam_step(double learning_rate);

  /// Eval-mode logits.
  Eigen::VectorXd logits(const Eigen::MatrixXd& x) const;

  std::size_t parameter_count() const;
  double& parameter(std::size_t index);
  double gradient(std::size_t index) const;
  std::vector<double> parameters() const;

  /// Replaces each hidden layer's weights with its batch-norm-folded version
  /// and drops the normalisation. Weights on inputs that were zero in every
  /// training batch are cleared first: they cannot affect the output, but
  /// after folding they could dominate the per-tensor weight scale.
  void fold_batchnorm_into_weights();
  /// Integer model; requires the detector dimensions.
  QuantizedMlp export_model() const;

  const QatOptions& options() const noexcept { return options_; }

 private:
  struct Layer {
    Eigen::MatrixXd w;  // out x in
    Eigen::VectorXd b, gamma, beta, running_mean, running_var;
    double act_running_max = 0.0;
    bool bn_active = false;
    /// Largest |input| per column over training batches.
    Eigen::VectorXd input_seen;

    Eigen::MatrixXd gw;
    Eigen::VectorXd gb, ggamma, gbeta;
    Eigen::MatrixXd mw, vw;
    Eigen::VectorXd mb, vb, mgamma, vgamma, mbeta, vbeta;

    // forward cache
    Eigen::MatrixXd input, wq, xhat, pre_relu, grad_mask, drop_mask;
    Eigen::VectorXd inv_std;
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool training, std::mt19937_64* rng);
  Eigen::MatrixXd effective_weights(const Layer& layer) const;
  double activation_scale(const Layer& layer) const;
  FloatLayer folded_float(const Layer& layer) const;
  void reset_adam();

  std::vector<std::size_t> dims_;
  QatOptions options_;
  std::vector<Layer> layers_;
  Eigen::VectorXd last_dz_;
  int adam_t_ = 0;
};

/// Rows of input activations in [0, 1] (4-bit codes times the input scale).
Eigen::MatrixXd input_matrix(const std::vector<FeatureVector>& features);

/// One pass over the data in shuffled mini-batches; returns the mean loss.
double train_epoch(QatNetwork& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& weight, int batch_size, double learning_rate,
                   std::mt19937_64& rng);

struct TrainResult {
  QuantizedMlp model = QuantizedMlp::zeros();
  std::vector<EpochLog> log;
};

/// Quantisation-aware training. Throws Error(kDegenerateData) for empty or
/// single-class data and Error(kNonFinite) when the loss diverges.
TrainResult train(const Dataset& train_set, const Dataset* validation, const TrainConfig& cfg);

}  // namespace seccan::qnn
