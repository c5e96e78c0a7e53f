#pragma once

#include <cstdint>
#include <vector>

#include "proxyhash/common.hpp"
#include "proxyhash/proxy_set.hpp"

namespace proxyhash {

/// Orthogonal d x d matrix; construction checks ||G^T G - I||_inf < 1e-8.
class RotationMatrix {
 public:
  static constexpr double kOrthogonalityTolerance = 1e-8;

  explicit RotationMatrix(MatrixXd matrix);
  static RotationMatrix identity(int d) { return RotationMatrix(MatrixXd::Identity(d, d)); }

  const MatrixXd& matrix() const noexcept { return matrix_; }
  int dim() const noexcept { return static_cast<int>(matrix_.rows()); }

 private:
  MatrixXd matrix_;
};

double orthogonality_defect(const MatrixXd& m);

struct AlignmentTrace {
  std::vector<double> errors;  // quantization error after each rotation update
  int iterations = 0;
  bool converged = false;
};

struct ItqConfig {
  int max_iters = 200;
  int restarts = 8;
  std::uint64_t seed = 0;
  double tolerance = 1e-10;
  // Soft-sign warm start of each restart; anneal_stages = 0 gives plain ITQ
  // from the random rotation. Sharpness is relative to the binary-direction
  // entry size, so the result does not depend on the scale of W.
  int anneal_stages = 20;
  int anneal_iters = 200;  // per stage, cut short once G stops moving
  double sharpness_start = 0.5;
  double sharpness_end = 100.0;
  double anneal_tolerance = 1e-12;
};

struct AlignmentResult {
  RotationMatrix rotation;
  AlignmentTrace trace;
  int best_restart = 0;
};

/// Alternating minimization of sum_k ||G w_k - sgn(G w_k)||^2 over orthogonal G:
/// B = sgn(G W) with G fixed, then G = U V^T from the SVD B W^T = U S V^T.
/// Each restart starts from a random rotation refined by a soft-sign
/// alternation; the trace covers the hard-sign phase.
AlignmentResult itq_rotation(const MatrixXd& weights, const ItqConfig& cfg);
AlignmentResult itq_rotation(const ProxySet& proxies, const ItqConfig& cfg);

double quantization_error(const RotationMatrix& rotation, const MatrixXd& weights);
double quantization_error(const RotationMatrix& rotation, const ProxySet& proxies);

/// sum_k ||G w_k||_1; equals C sqrt(d) exactly when every rotated unit proxy is a binary direction.
double l1_mass(const RotationMatrix& rotation, const MatrixXd& weights);

/// The "aligned" proxy set G W (still real-valued, same margins).
ProxySet rotate(const RotationMatrix& rotation, const ProxySet& proxies);

/// sgn(G W) as an hclm proxy set. Duplicate columns are kept and reported.
ProxySet binarize(const RotationMatrix& rotation, const ProxySet& proxies, Warnings* warnings = nullptr);

int count_duplicate_columns(const MatrixXd& weights);

}  // namespace proxyhash
