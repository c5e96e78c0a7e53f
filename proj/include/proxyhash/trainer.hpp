#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "proxyhash/common.hpp"
#include "proxyhash/dataset.hpp"
#include "proxyhash/hashing_layer.hpp"
#include "proxyhash/proxy_set.hpp"

namespace proxyhash {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double lambda = 1.0;          // triplet weight; 0 disables triplet sampling
  double triplet_margin = 2.0;  // in bits
  double logit_scale = 1.0;
  std::vector<double> balance_weights;  // multi-label only; empty -> derived from tag frequencies
  double decay_fraction = 2.0 / 3.0;    // learning rate x decay_factor from this fraction of epochs on
  double decay_factor = 0.1;
  bool trainable_proxies = false;       // "learned" baseline only
  std::uint64_t seed = 0;

  void validate() const;
};

struct Triplet {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;

  bool operator==(const Triplet&) const = default;
};

/// Inputs as f64 columns plus the supervision signal, ready for training.
class TrainingSet {
 public:
  explicit TrainingSet(const FeatureDataset& data, std::vector<double> balance = {});

  const MatrixXd& inputs() const noexcept { return inputs_; }  // D x n
  std::size_t size() const noexcept { return static_cast<std::size_t>(inputs_.cols()); }
  bool multi_label() const noexcept { return tags_.has_value(); }
  const std::vector<int>& labels() const { return *labels_; }
  const TagMatrix& tags() const { return *tags_; }
  const std::vector<double>& balance() const noexcept { return balance_; }
  int num_classes() const noexcept { return classes_; }

  bool similar(std::size_t i, std::size_t j) const;

 private:
  MatrixXd inputs_;
  std::optional<std::vector<int>> labels_;
  std::optional<TagMatrix> tags_;
  std::vector<double> balance_;
  int classes_ = 0;
};

/// For each anchor in the batch: one uniformly drawn positive and one
/// uniformly drawn negative from the same batch; anchors lacking either are
/// skipped. Indices are dataset indices.
std::vector<Triplet> sample_triplets(const TrainingSet& data, std::span<const std::size_t> batch, std::uint64_t seed);

struct LossSettings {
  double lambda = 1.0;
  double triplet_margin = 2.0;
  double logit_scale = 1.0;

  static LossSettings from(const TrainConfig& cfg) { return {cfg.lambda, cfg.triplet_margin, cfg.logit_scale}; }
};

struct BatchLoss {
  double proxy = 0.0;    // mean over the batch
  double triplet = 0.0;  // mean over triplets (0 when none)
  double total = 0.0;    // proxy + lambda * triplet
  std::size_t triplets = 0;
};

BatchLoss joint_loss(const HashingLayer& layer, const TrainingSet& data, std::span<const std::size_t> batch,
                     std::span<const Triplet> triplets, const LossSettings& settings, Warnings* warnings = nullptr);

/// Gradients of joint_loss with respect to the trainable layer parameters.
/// The proxy matrix has no slot here: it is fixed.
struct LayerGradients {
  MatrixXd projection;  // D x d
  VectorXd bias;
};

LayerGradients gradients(const HashingLayer& layer, const TrainingSet& data, std::span<const std::size_t> batch,
                         std::span<const Triplet> triplets, const LossSettings& settings, BatchLoss* loss = nullptr);

/// Gradient with respect to the proxy matrix, used only when proxies are
/// released for the learned baseline.
MatrixXd proxy_gradient(const HashingLayer& layer, const TrainingSet& data, std::span<const std::size_t> batch,
                        const LossSettings& settings);

struct TrainResult {
  HashingLayer layer;
  std::vector<double> epoch_loss;      // mean batch loss per epoch
  double first_batch_proxy_loss = 0.0; // before any update
};

/// Minibatch gradient descent with momentum. Deterministic for a fixed seed.
TrainResult train(const FeatureDataset& data, const ProxySet& proxies, const TrainConfig& cfg,
                  Warnings* warnings = nullptr);

}  // namespace proxyhash
