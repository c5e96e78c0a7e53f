#include "proxyhash/theory_checks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "proxyhash/binary_alignment.hpp"
#include "proxyhash/losses.hpp"

namespace proxyhash {

namespace {

VectorXd softmax(const VectorXd& logits) {
  const double peak = logits.maxCoeff();
  VectorXd e = (logits.array() - peak).exp().matrix();
  return e / e.sum();
}

void check_shapes(const VectorXd& nu, const MatrixXd& weights) {
  if (weights.cols() < 1) throw std::invalid_argument("need at least one class");
  if (nu.size() != weights.rows()) throw std::invalid_argument("embedding/proxy dimension mismatch");
}

}  // namespace

VectorXd softmax_dot_form(const VectorXd& nu, const MatrixXd& weights, const VectorXd& biases) {
  check_shapes(nu, weights);
  if (biases.size() != weights.cols()) throw std::invalid_argument("bias count mismatch");
  return softmax(weights.transpose() * nu + biases);
}

VectorXd softmax_distance_form(const VectorXd& nu, const MatrixXd& weights) {
  check_shapes(nu, weights);
  return softmax(-0.5 * (weights.colwise() - nu).colwise().squaredNorm().transpose());
}

VectorXd matched_biases(const MatrixXd& weights, double shift) {
  return (-0.5 * weights.colwise().squaredNorm().transpose()).array() + shift;
}

double check_equivalence(const VectorXd& nu, const MatrixXd& weights, const VectorXd& biases) {
  return (softmax_dot_form(nu, weights, biases) - softmax_distance_form(nu, weights)).cwiseAbs().maxCoeff();
}

RotationReport rotation_ambiguity_demo(const MatrixXd& embeddings, std::span<const int> labels,
                                       const MatrixXd& weights, const MatrixXd& rotation) {
  const Eigen::Index d = embeddings.rows();
  if (rotation.rows() != d || rotation.cols() != d || weights.rows() != d) {
    throw std::invalid_argument("rotation/embedding/proxy dimension mismatch");
  }
  if (orthogonality_defect(rotation) > 1e-8) throw std::invalid_argument("rotation is not orthogonal");
  if (static_cast<Eigen::Index>(labels.size()) != embeddings.cols()) throw std::invalid_argument("label count mismatch");

  const auto mean_loss = [&](const MatrixXd& e, const MatrixXd& w) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < e.cols(); ++i) {
      total += proxy_loss_single(e.col(i), labels[static_cast<std::size_t>(i)], w, 1.0, nullptr, nullptr);
    }
    return total / static_cast<double>(std::max<Eigen::Index>(1, e.cols()));
  };
  const auto pairwise_hamming = [](const MatrixXd& s) {
    std::uint64_t total = 0;
    for (Eigen::Index i = 0; i < s.cols(); ++i)
      for (Eigen::Index j = i + 1; j < s.cols(); ++j)
        total += static_cast<std::uint64_t>((s.col(i).array() != s.col(j).array()).count());
    return total;
  };
  const auto same_class_equal = [&](const MatrixXd& s) {
    for (Eigen::Index i = 0; i < s.cols(); ++i)
      for (Eigen::Index j = i + 1; j < s.cols(); ++j)
        if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] && s.col(i) != s.col(j))
          return false;
    return true;
  };

  const MatrixXd rotated = rotation * embeddings;
  const MatrixXd signs_before = sign_matrix(embeddings);
  const MatrixXd signs_after = sign_matrix(rotated);

  RotationReport r;
  r.loss_before = mean_loss(embeddings, weights);
  r.loss_after = mean_loss(rotated, rotation * weights);
  r.hamming_before = pairwise_hamming(signs_before);
  r.hamming_after = pairwise_hamming(signs_after);
  r.codes_changed = signs_before != signs_after;
  r.same_class_codes_equal_before = same_class_equal(signs_before);
  r.same_class_codes_equal_after = same_class_equal(signs_after);
  return r;
}

PlanarLayout four_class_planar_layout() {
  // Proxies on the diagonals so that each class owns one quadrant; samples
  // jitter around their proxy without leaving the quadrant.
  const double h = std::numbers::sqrt2 / 2.0;
  PlanarLayout layout;
  layout.proxies.resize(2, 4);
  layout.proxies << h, -h, -h, h,
                    h, h, -h, -h;
  const double jitter[3] = {-0.25, 0.0, 0.25};
  layout.embeddings.resize(2, 12);
  for (int c = 0; c < 4; ++c) {
    const double base = std::atan2(layout.proxies(1, c), layout.proxies(0, c));
    for (int k = 0; k < 3; ++k) {
      const double angle = base + jitter[k];
      layout.embeddings(0, c * 3 + k) = 0.8 * std::cos(angle);
      layout.embeddings(1, c * 3 + k) = 0.8 * std::sin(angle);
      layout.labels.push_back(c);
    }
  }
  return layout;
}

MatrixXd planar_rotation(double radians) {
  MatrixXd r(2, 2);
  r << std::cos(radians), -std::sin(radians),
       std::sin(radians), std::cos(radians);
  return r;
}

SuiteResult run_equivalence_suite(int trials, std::uint64_t seed) {
  SuiteResult out;
  auto rng = make_rng(seed, 0x45515556);
  std::uniform_int_distribution<int> dim(1, 32);
  std::uniform_int_distribution<int> cls(2, 20);
  std::normal_distribution<double> shift(0.0, 3.0);
  for (int t = 0; t < trials; ++t) {
    const int d = dim(rng);
    const int c = cls(rng);
    const MatrixXd w = gaussian_matrix(d, c, rng);
    const VectorXd nu = gaussian_matrix(d, 1, rng).col(0);
    const double gap = check_equivalence(nu, w, matched_biases(w, shift(rng)));
    out.worst = std::max(out.worst, gap);
    ++out.trials;
    if (!(gap < 1e-12)) ++out.failures;
  }
  return out;
}

SuiteResult run_rotation_suite(int trials, std::uint64_t seed) {
  SuiteResult out;
  auto rng = make_rng(seed, 0x524f5441);
  std::uniform_int_distribution<int> dim(2, 32);
  std::uniform_int_distribution<int> cls(2, 12);
  for (int t = 0; t < trials; ++t) {
    const int d = dim(rng);
    const int c = cls(rng);
    const MatrixXd w = gaussian_matrix(d, c, rng);
    const MatrixXd e = gaussian_matrix(d, 8, rng);
    std::vector<int> labels(8);
    std::uniform_int_distribution<int> pick(0, c - 1);
    for (auto& y : labels) y = pick(rng);
    const MatrixXd r = random_orthogonal(d, rng);
    const RotationReport rep = rotation_ambiguity_demo(e, labels, w, r);
    const double gap = std::abs(rep.loss_after - rep.loss_before);
    out.worst = std::max(out.worst, gap);
    ++out.trials;
    if (!(gap < 1e-12)) ++out.failures;
    if (rep.codes_changed) ++out.codes_changed;
  }
  if (trials > 0 && out.codes_changed == 0) ++out.failures;
  return out;
}

}  // namespace proxyhash
