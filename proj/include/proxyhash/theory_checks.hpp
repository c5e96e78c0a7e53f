#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "proxyhash/common.hpp"

namespace proxyhash {

/// softmax_y(w_y^T nu + b_y).
VectorXd softmax_dot_form(const VectorXd& nu, const MatrixXd& weights, const VectorXd& biases);

/// softmax_y(-d_phi(nu, w_y)) with d_phi(a, b) = 0.5 ||a - b||^2.
VectorXd softmax_distance_form(const VectorXd& nu, const MatrixXd& weights);

/// b_y = -0.5 ||w_y||^2 + shift; the biases that make both forms coincide.
VectorXd matched_biases(const MatrixXd& weights, double shift = 0.0);

/// Max absolute difference between the two softmax forms.
double check_equivalence(const VectorXd& nu, const MatrixXd& weights, const VectorXd& biases);

struct RotationReport {
  double loss_before = 0.0;  // mean proxy cross-entropy over the embedding set
  double loss_after = 0.0;
  std::uint64_t hamming_before = 0;  // summed pairwise Hamming distance of sgn patterns
  std::uint64_t hamming_after = 0;
  bool codes_changed = false;        // any sgn pattern differs after rotation
  bool same_class_codes_equal_before = false;
  bool same_class_codes_equal_after = false;
};

/// Rotates embeddings (d x n) and proxies (d x C) jointly by R and compares
/// the cross-entropy loss with the sign codes. labels in [0, C).
RotationReport rotation_ambiguity_demo(const MatrixXd& embeddings, std::span<const int> labels,
                                       const MatrixXd& weights, const MatrixXd& rotation);

/// Four classes in d = 2 with proxies on the diagonals and three samples per class
/// clustered around each proxy. Returns (embeddings, labels, proxies).
struct PlanarLayout {
  MatrixXd embeddings;
  std::vector<int> labels;
  MatrixXd proxies;
};
PlanarLayout four_class_planar_layout();
MatrixXd planar_rotation(double radians);

struct SuiteResult {
  int trials = 0;
  int failures = 0;
  double worst = 0.0;          // largest discrepancy seen
  int codes_changed = 0;       // rotation suite only
  bool passed() const noexcept { return failures == 0; }
};

/// Random (nu, W) instances with matched biases; fails a trial above 1e-12.
SuiteResult run_equivalence_suite(int trials, std::uint64_t seed);
/// Random joint rotations; fails a trial when the loss moves by 1e-12 or more,
/// and fails the suite when no trial changes a code.
SuiteResult run_rotation_suite(int trials, std::uint64_t seed);

}  // namespace proxyhash
