#include "proxyhash/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace proxyhash {

double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double proxy_loss_single(const VectorXd& nu, int label, const MatrixXd& proxies, double logit_scale,
                         VectorXd* grad_nu, MatrixXd* grad_proxies) {
  if (nu.size() != proxies.rows()) throw std::invalid_argument("proxy_loss_single: dimension mismatch");
  if (label < 0 || label >= proxies.cols()) {
    throw std::invalid_argument("proxy_loss_single: label " + std::to_string(label) + " out of range");
  }
  const VectorXd logits = logit_scale * (proxies.transpose() * nu);
  const double top = logits.maxCoeff();
  const VectorXd shifted = (logits.array() - top).exp().matrix();
  const double z = shifted.sum();
  const double loss = std::log(z) + top - logits(label);

  if (grad_nu != nullptr || grad_proxies != nullptr) {
    VectorXd residual = shifted / z;  // softmax
    residual(label) -= 1.0;
    residual *= logit_scale;
    if (grad_nu != nullptr) *grad_nu += proxies * residual;
    if (grad_proxies != nullptr) *grad_proxies += nu * residual.transpose();
  }
  return loss;
}

double proxy_loss_multi(const VectorXd& nu, std::span<const std::uint8_t> tags, const MatrixXd& proxies,
                        std::span<const double> balance, VectorXd* grad_nu, MatrixXd* grad_proxies) {
  if (nu.size() != proxies.rows()) throw std::invalid_argument("proxy_loss_multi: dimension mismatch");
  if (tags.size() != static_cast<std::size_t>(proxies.cols()) || balance.size() != tags.size()) {
    throw std::invalid_argument("proxy_loss_multi: tag/balance length must equal proxy count");
  }
  const VectorXd z = proxies.transpose() * nu;
  VectorXd dz(z.size());
  double loss = 0.0;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const double pos = balance[kk] * (tags[kk] ? 1.0 : 0.0);
    const double neg = (1.0 - balance[kk]) * (tags[kk] ? 0.0 : 1.0);
    // -log s = softplus(-z), -log(1 - s) = softplus(z)
    loss += pos * softplus(-z(k)) + neg * softplus(z(k));
    const double s = sigmoid(z(k));
    dz(k) = -pos * (1.0 - s) + neg * s;
  }
  if (grad_nu != nullptr) *grad_nu += proxies * dz;
  if (grad_proxies != nullptr) *grad_proxies += nu * dz.transpose();
  return loss;
}

std::vector<double> balance_weights(const TagMatrix& tags) {
  std::vector<double> c(tags.cols, 0.0);
  if (tags.rows == 0) return c;
  for (std::size_t n = 0; n < tags.rows; ++n)
    for (std::size_t k = 0; k < tags.cols; ++k) c[k] += tags(n, k);
  for (auto& v : c) v = 1.0 - v / static_cast<double>(tags.rows);
  return c;
}

double hamming_surrogate(const VectorXd& a, const VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming_surrogate: dimension mismatch");
  return 0.5 * (static_cast<double>(a.size()) - a.dot(b));
}

double triplet_loss(const VectorXd& anchor, const VectorXd& positive, const VectorXd& negative, double margin,
                    VectorXd* grad_anchor, VectorXd* grad_positive, VectorXd* grad_negative) {
  if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
    throw std::invalid_argument("triplet_loss: dimension mismatch");
  }
  const double u = margin + hamming_surrogate(anchor, positive) - hamming_surrogate(anchor, negative);
  const double w = 0.5 * sigmoid(u);
  // du/da = (n - p)/2, du/dp = -a/2, du/dn = a/2
  if (grad_anchor != nullptr) *grad_anchor += w * (negative - positive);
  if (grad_positive != nullptr) *grad_positive -= w * anchor;
  if (grad_negative != nullptr) *grad_negative += w * anchor;
  return softplus(u);
}

}  // namespace proxyhash
