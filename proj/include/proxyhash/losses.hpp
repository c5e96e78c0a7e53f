#pragma once

// Per-sample losses on the embedding nu(x). Gradient outputs, when given,
// are accumulated into (+=), never overwritten.

#include <cstdint>
#include <span>
#include <vector>

#include "proxyhash/common.hpp"
#include "proxyhash/dataset.hpp"

namespace proxyhash {

/// log(1 + e^x) without overflow.
double softplus(double x) noexcept;
double sigmoid(double x) noexcept;

/// -log softmax_y(scale * W^T nu).
double proxy_loss_single(const VectorXd& nu, int label, const MatrixXd& proxies, double logit_scale,
                         VectorXd* grad_nu = nullptr, MatrixXd* grad_proxies = nullptr);

/// Balanced binary cross-entropy over tags with s_k = sigmoid(w_k^T nu):
/// -sum_k [c_k t_k log s_k + (1 - c_k)(1 - t_k) log(1 - s_k)].
double proxy_loss_multi(const VectorXd& nu, std::span<const std::uint8_t> tags, const MatrixXd& proxies,
                        std::span<const double> balance, VectorXd* grad_nu = nullptr,
                        MatrixXd* grad_proxies = nullptr);

/// c_k = 1 - (fraction of samples carrying tag k).
std::vector<double> balance_weights(const TagMatrix& tags);

/// 1/2 (d - a^T b): a differentiable Hamming distance for codes in [-1, 1]^d.
double hamming_surrogate(const VectorXd& a, const VectorXd& b);

/// log(1 + exp(m + d_H(a, p) - d_H(a, n))).
double triplet_loss(const VectorXd& anchor, const VectorXd& positive, const VectorXd& negative, double margin,
                    VectorXd* grad_anchor = nullptr, VectorXd* grad_positive = nullptr,
                    VectorXd* grad_negative = nullptr);

}  // namespace proxyhash
