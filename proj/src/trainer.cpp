#include "proxyhash/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "proxyhash/kernels/kernels.hpp"
#include "proxyhash/losses.hpp"

namespace proxyhash {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (triplet_margin < 0.0) throw std::invalid_argument("triplet margin must be >= 0");
  if (lambda > 0.0 && batch_size < 2) throw std::invalid_argument("triplet loss needs batch_size >= 2");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must be in [0, 1)");
  for (double c : balance_weights)
    if (c < 0.0 || c > 1.0) throw std::invalid_argument("balance weights must lie in [0, 1]");
}

TrainingSet::TrainingSet(const FeatureDataset& data, std::vector<double> balance)
    : inputs_(data.features.to_columns()), labels_(data.labels), tags_(data.tags) {
  data.validate();
  classes_ = data.num_classes();
  if (tags_) {
    balance_ = balance.empty() ? balance_weights(*tags_) : std::move(balance);
    if (balance_.size() != tags_->cols) throw std::invalid_argument("balance weight count must equal tag count");
  }
}

bool TrainingSet::similar(std::size_t i, std::size_t j) const {
  if (labels_) return (*labels_)[i] == (*labels_)[j];
  return share_tag(tags_->row(i), tags_->row(j));
}

std::vector<Triplet> sample_triplets(const TrainingSet& data, std::span<const std::size_t> batch, std::uint64_t seed) {
  std::vector<Triplet> out;
  if (batch.size() < 2) return out;
  auto rng = make_rng(seed, 0x54524950);
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t a = 0; a < batch.size(); ++a) {
    positives.clear();
    negatives.clear();
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (b == a) continue;
      (data.similar(batch[a], batch[b]) ? positives : negatives).push_back(batch[b]);
    }
    if (positives.empty() || negatives.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick_pos(0, positives.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_neg(0, negatives.size() - 1);
    const std::size_t p = positives[pick_pos(rng)];
    const std::size_t n = negatives[pick_neg(rng)];
    out.push_back({batch[a], p, n});
  }
  return out;
}

namespace {

struct BatchPass {
  MatrixXd embeddings;  // d x |batch|
  std::unordered_map<std::size_t, Eigen::Index> position;
};

BatchPass forward_batch(const HashingLayer& layer, const TrainingSet& data, std::span<const std::size_t> batch) {
  BatchPass pass{MatrixXd(layer.bits(), static_cast<Eigen::Index>(batch.size())), {}};
  const auto rows = static_cast<std::size_t>(data.inputs().rows());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    layer.forward(std::span<const double>(data.inputs().col(static_cast<Eigen::Index>(batch[i])).data(), rows),
                  std::span<double>(pass.embeddings.col(static_cast<Eigen::Index>(i)).data(),
                                    static_cast<std::size_t>(layer.bits())));
    pass.position.emplace(batch[i], static_cast<Eigen::Index>(i));
  }
  return pass;
}

Eigen::Index lookup(const BatchPass& pass, std::size_t index) {
  const auto it = pass.position.find(index);
  if (it == pass.position.end()) throw std::invalid_argument("triplet references a sample outside the batch");
  return it->second;
}

// Loss and d(loss)/d(nu) for every batch column; optional proxy gradient.
BatchLoss evaluate(const HashingLayer& layer, const TrainingSet& data, std::span<const std::size_t> batch,
                   std::span<const Triplet> triplets, const LossSettings& settings, const BatchPass& pass,
                   MatrixXd* grad_nu, MatrixXd* grad_proxies) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const MatrixXd& w = layer.proxies().weights();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  BatchLoss loss;
  if (grad_nu != nullptr) grad_nu->setZero(layer.bits(), static_cast<Eigen::Index>(batch.size()));

  VectorXd g(layer.bits());
  MatrixXd gw;
  if (grad_proxies != nullptr) gw = MatrixXd::Zero(w.rows(), w.cols());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const VectorXd nu = pass.embeddings.col(col);
    g.setZero();
    VectorXd* gp = grad_nu != nullptr ? &g : nullptr;
    MatrixXd* gwp = grad_proxies != nullptr ? &gw : nullptr;
    if (data.multi_label()) {
      loss.proxy += proxy_loss_multi(nu, data.tags().row(batch[i]), w, data.balance(), gp, gwp);
    } else {
      loss.proxy += proxy_loss_single(nu, data.labels()[batch[i]], w, settings.logit_scale, gp, gwp);
    }
    if (grad_nu != nullptr) grad_nu->col(col) += inv_batch * g;
  }
  loss.proxy *= inv_batch;
  if (grad_proxies != nullptr) *grad_proxies = inv_batch * gw;

  if (settings.lambda > 0.0 && !triplets.empty()) {
    const double scale = settings.lambda / static_cast<double>(triplets.size());
    VectorXd ga(layer.bits()), gpos(layer.bits()), gneg(layer.bits());
    for (const Triplet& t : triplets) {
      const Eigen::Index a = lookup(pass, t.anchor);
      const Eigen::Index p = lookup(pass, t.positive);
      const Eigen::Index n = lookup(pass, t.negative);
      ga.setZero();
      gpos.setZero();
      gneg.setZero();
      const bool want = grad_nu != nullptr;
      loss.triplet += triplet_loss(pass.embeddings.col(a), pass.embeddings.col(p), pass.embeddings.col(n),
                                   settings.triplet_margin, want ? &ga : nullptr, want ? &gpos : nullptr,
                                   want ? &gneg : nullptr);
      if (want) {
        grad_nu->col(a) += scale * ga;
        grad_nu->col(p) += scale * gpos;
        grad_nu->col(n) += scale * gneg;
      }
    }
    loss.triplets = triplets.size();
    loss.triplet /= static_cast<double>(triplets.size());
  }
  loss.total = loss.proxy + settings.lambda * loss.triplet;
  return loss;
}

}  // namespace

BatchLoss joint_loss(const HashingLayer& layer, const TrainingSet& data, std::span<const std::size_t> batch,
                     std::span<const Triplet> triplets, const LossSettings& settings, Warnings* warnings) {
  if (settings.lambda > 0.0 && triplets.empty()) {
    warn(warnings, "joint_loss: lambda > 0 but the batch has no valid triplet; triplet term is 0");
  }
  const BatchPass pass = forward_batch(layer, data, batch);
  return evaluate(layer, data, batch, triplets, settings, pass, nullptr, nullptr);
}

LayerGradients gradients(const HashingLayer& layer, const TrainingSet& data, std::span<const std::size_t> batch,
                         std::span<const Triplet> triplets, const LossSettings& settings, BatchLoss* loss) {
  const BatchPass pass = forward_batch(layer, data, batch);
  MatrixXd grad_nu;
  const BatchLoss value = evaluate(layer, data, batch, triplets, settings, pass, &grad_nu, nullptr);
  if (loss != nullptr) *loss = value;

  LayerGradients out{MatrixXd::Zero(layer.input_dim(), layer.bits()), VectorXd::Zero(layer.bits())};
  const auto& k = kernels::active();
  const auto rows = static_cast<std::size_t>(layer.input_dim());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const double* input = data.inputs().col(static_cast<Eigen::Index>(batch[i])).data();
    for (Eigen::Index j = 0; j < layer.bits(); ++j) {
      const double nu = pass.embeddings(j, col);
      const double pre = grad_nu(j, col) * (1.0 - nu * nu);  // tanh'
      if (pre == 0.0) continue;
      out.bias(j) += pre;
      k.axpy(pre, input, out.projection.col(j).data(), rows);
    }
  }
  return out;
}

MatrixXd proxy_gradient(const HashingLayer& layer, const TrainingSet& data, std::span<const std::size_t> batch,
                        const LossSettings& settings) {
  const BatchPass pass = forward_batch(layer, data, batch);
  MatrixXd grad;
  evaluate(layer, data, batch, {}, settings, pass, nullptr, &grad);
  return grad;
}

TrainResult train(const FeatureDataset& data, const ProxySet& proxies, const TrainConfig& cfg, Warnings* warnings) {
  cfg.validate();
  const TrainingSet set(data, cfg.balance_weights);
  if (set.num_classes() > proxies.classes()) {
    throw std::invalid_argument("dataset has " + std::to_string(set.num_classes()) + " classes but only " +
                                std::to_string(proxies.classes()) + " proxies");
  }
  if (set.multi_label() && set.num_classes() != proxies.classes()) {
    throw std::invalid_argument("multi-label training needs one proxy per tag");
  }
  const LossSettings settings = LossSettings::from(cfg);
  TrainResult result{HashingLayer::initialize(static_cast<int>(data.dim()), proxies, cfg.seed), {}, 0.0};
  HashingLayer& layer = result.layer;

  MatrixXd vel_l = MatrixXd::Zero(layer.input_dim(), layer.bits());
  VectorXd vel_b = VectorXd::Zero(layer.bits());
  MatrixXd vel_w;
  MatrixXd free_w;
  if (cfg.trainable_proxies) {
    free_w = proxies.weights();
    vel_w = MatrixXd::Zero(free_w.rows(), free_w.cols());
  }

  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  const int decay_epoch = static_cast<int>(std::ceil(cfg.decay_fraction * cfg.epochs));
  bool warned_no_triplets = false;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto shuffle_rng = make_rng(cfg.seed, 0x45504f43ULL + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const double lr = epoch >= decay_epoch ? cfg.learning_rate * cfg.decay_factor : cfg.learning_rate;
    double epoch_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::span<const std::size_t> batch(order.data() + start, std::min(bs, order.size() - start));
      std::vector<Triplet> triplets;
      if (cfg.lambda > 0.0) {
        const std::uint64_t stream = (static_cast<std::uint64_t>(epoch) << 32) ^ static_cast<std::uint64_t>(batches);
        triplets = sample_triplets(set, batch, cfg.seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
        if (triplets.empty() && !warned_no_triplets) {
          warn(warnings, "train: some batches contain no valid triplet; their triplet term is 0");
          warned_no_triplets = true;
        }
      }
      BatchLoss loss;
      const LayerGradients grad = gradients(layer, set, batch, triplets, settings, &loss);
      if (!std::isfinite(loss.total)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << ", batch " << batches << " (proxy=" << loss.proxy
            << ", triplet=" << loss.triplet << ")";
        throw std::runtime_error(msg.str());
      }
      if (epoch == 0 && batches == 0) result.first_batch_proxy_loss = loss.proxy;

      if (cfg.trainable_proxies) {
        const MatrixXd gw = proxy_gradient(layer, set, batch, settings);
        vel_w = cfg.momentum * vel_w - lr * gw;
        free_w += vel_w;
      }
      vel_l = cfg.momentum * vel_l - lr * grad.projection;
      vel_b = cfg.momentum * vel_b - lr * grad.bias;
      layer.mutable_projection() += vel_l;
      layer.mutable_bias() += vel_b;
      if (cfg.trainable_proxies) layer.replace_proxies(ProxySet::learned(free_w));

      epoch_total += loss.total;
      ++batches;
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(batches));
  }
  return result;
}

}  // namespace proxyhash
