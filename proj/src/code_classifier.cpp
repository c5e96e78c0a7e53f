#include "proxyhash/code_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace proxyhash {

double classifier_loss(const MatrixXd& weights, const MatrixXd& inputs, std::span<const int> targets, double l2,
                       MatrixXd* grad) {
  const Eigen::Index d = inputs.rows();
  const Eigen::Index n = inputs.cols();
  if (weights.cols() != d + 1) throw std::invalid_argument("classifier_loss: weight shape mismatch");
  if (static_cast<Eigen::Index>(targets.size()) != n) throw std::invalid_argument("classifier_loss: target count mismatch");

  const MatrixXd logits = (weights.leftCols(d) * inputs).colwise() + weights.col(d);
  double loss = 0.0;
  MatrixXd residual(weights.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double peak = logits.col(i).maxCoeff();
    const VectorXd e = (logits.col(i).array() - peak).exp().matrix();
    const double z = e.sum();
    loss += std::log(z) + peak - logits(targets[static_cast<std::size_t>(i)], i);
    residual.col(i) = e / z;
    residual(targets[static_cast<std::size_t>(i)], i) -= 1.0;
  }
  loss /= static_cast<double>(n);
  loss += 0.5 * l2 * weights.leftCols(d).squaredNorm();

  if (grad != nullptr) {
    if (grad->rows() != weights.rows() || grad->cols() != weights.cols()) grad->setZero(weights.rows(), weights.cols());
    grad->leftCols(d) += residual * inputs.transpose() / static_cast<double>(n) + l2 * weights.leftCols(d);
    grad->col(d) += residual.rowwise().sum() / static_cast<double>(n);
  }
  return loss;
}

CodeClassifier CodeClassifier::fit(const BinaryCodes& codes, std::span<const int> labels, const ClassifierConfig& cfg) {
  if (codes.size() != labels.size()) throw std::invalid_argument("code/label count mismatch");
  CodeClassifier model;
  model.classes_.assign(labels.begin(), labels.end());
  std::sort(model.classes_.begin(), model.classes_.end());
  model.classes_.erase(std::unique(model.classes_.begin(), model.classes_.end()), model.classes_.end());
  if (model.classes_.size() < 2) throw std::invalid_argument("code classifier needs at least two classes");

  std::vector<int> targets(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    targets[i] = static_cast<int>(std::lower_bound(model.classes_.begin(), model.classes_.end(), labels[i]) -
                                  model.classes_.begin());
  }
  const MatrixXd inputs = codes.to_signs();
  const auto c = static_cast<Eigen::Index>(model.classes_.size());
  model.weights_ = MatrixXd::Zero(c, codes.bits() + 1);
  // +-1 inputs have norm sqrt(d); scale the step to match.
  const double step = cfg.learning_rate / std::max(1.0, std::sqrt(static_cast<double>(codes.bits())));
  MatrixXd grad;
  for (int it = 0; it < cfg.iterations; ++it) {
    grad.setZero(model.weights_.rows(), model.weights_.cols());
    classifier_loss(model.weights_, inputs, targets, cfg.l2, &grad);
    model.weights_ -= step * grad;
  }
  return model;
}

int CodeClassifier::predict(std::span<const std::uint64_t> code, int bits) const {
  const auto d = static_cast<Eigen::Index>(bits);
  if (weights_.cols() != d + 1) throw std::invalid_argument("code length does not match classifier");
  VectorXd logits = weights_.col(d);
  for (int j = 0; j < bits; ++j) {
    const double s = ((code[static_cast<std::size_t>(j) / 64] >> (j % 64)) & 1U) ? 1.0 : -1.0;
    logits += s * weights_.col(j);
  }
  Eigen::Index best = 0;
  logits.maxCoeff(&best);  // first maximum on ties
  return classes_[static_cast<std::size_t>(best)];
}

std::vector<int> CodeClassifier::predict(const BinaryCodes& codes) const {
  std::vector<int> out(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) out[i] = predict(codes.code(i), codes.bits());
  return out;
}

double CodeClassifier::accuracy(const BinaryCodes& codes, std::span<const int> labels) const {
  if (codes.size() != labels.size()) throw std::invalid_argument("code/label count mismatch");
  if (codes.size() == 0) return 0.0;
  const auto pred = predict(codes);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(codes.size());
}

}  // namespace proxyhash
