#include "proxyhash/binary_alignment.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace proxyhash {

double orthogonality_defect(const MatrixXd& m) {
  const MatrixXd defect = m.transpose() * m - MatrixXd::Identity(m.cols(), m.cols());
  return defect.cwiseAbs().maxCoeff();
}

RotationMatrix::RotationMatrix(MatrixXd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 1) {
    throw std::invalid_argument("rotation must be a non-empty square matrix");
  }
  if (!(orthogonality_defect(matrix_) < kOrthogonalityTolerance)) {
    throw std::invalid_argument("rotation is not orthogonal");
  }
}

namespace {

void check_dims(const RotationMatrix& rotation, const MatrixXd& weights) {
  if (rotation.dim() != weights.rows()) {
    throw std::invalid_argument("rotation is " + std::to_string(rotation.dim()) + "x" +
                                std::to_string(rotation.dim()) + " but proxies have dimension " +
                                std::to_string(weights.rows()));
  }
}

double residual(const MatrixXd& rotated) { return (rotated - sign_matrix(rotated)).squaredNorm(); }

struct RestartOutcome {
  MatrixXd rotation;
  AlignmentTrace trace;
  double error;
};

MatrixXd polar_factor(const MatrixXd& m) {
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // With M = U S V^T, G = U V^T maximizes tr(G^T M).
  return svd.matrixU() * svd.matrixV().transpose();
}

// Soft-sign alternation: B = tanh(beta * GW) in place of sgn, then the same
// Procrustes update, with beta raised geometrically toward the hard sign.
// Each stage ascends sum log cosh(beta * GW), which is convex in G, so the
// polar step never decreases it. Small beta weighs the fourth moment of the
// rotated entries and so favors flat (binary-like) directions globally before
// the hard sign locks in a basin.
MatrixXd anneal_rotation(MatrixXd g, const MatrixXd& w, const ItqConfig& cfg) {
  // Unit-free sharpness: entries of a binary direction with w's norm have magnitude rms/sqrt(d).
  const double rms = std::sqrt(w.squaredNorm() / static_cast<double>(w.cols()));
  const double unit = rms > 0.0 ? std::sqrt(static_cast<double>(w.rows())) / rms : 1.0;
  const MatrixXd wt = w.transpose();
  for (int s = 0; s < cfg.anneal_stages; ++s) {
    const double t = cfg.anneal_stages > 1 ? static_cast<double>(s) / (cfg.anneal_stages - 1) : 1.0;
    const double beta = cfg.sharpness_start * std::pow(cfg.sharpness_end / cfg.sharpness_start, t) * unit;
    for (int it = 0; it < cfg.anneal_iters; ++it) {
      const MatrixXd soft = (beta * (g * w)).array().tanh().matrix();
      MatrixXd next = polar_factor(soft * wt);
      const double moved = (next - g).cwiseAbs().maxCoeff();
      g = std::move(next);
      if (moved < cfg.anneal_tolerance) break;
    }
  }
  return g;
}

RestartOutcome run_restart(const MatrixXd& w, const ItqConfig& cfg, std::uint64_t stream) {
  auto rng = make_rng(cfg.seed, stream);
  MatrixXd g = anneal_rotation(random_orthogonal(w.rows(), rng), w, cfg);
  RestartOutcome out{g, {}, residual(g * w)};
  MatrixXd codes = sign_matrix(g * w);
  out.trace.errors.push_back(out.error);

  for (int it = 0; it < cfg.max_iters; ++it) {
    MatrixXd next = polar_factor(codes * w.transpose());
    const MatrixXd rotated = next * w;
    const double err = residual(rotated);
    ++out.trace.iterations;
    if (err > out.error) {
      // Rounding-level increase means the alternation is at its fixed point.
      out.trace.converged = true;
      break;
    }
    const double change = out.error - err;
    g = std::move(next);
    out.error = err;
    out.trace.errors.push_back(err);
    MatrixXd next_codes = sign_matrix(rotated);
    const bool same_codes = next_codes == codes;
    codes = std::move(next_codes);
    if (same_codes || change < cfg.tolerance) {
      out.trace.converged = true;
      break;
    }
  }
  out.rotation = std::move(g);
  return out;
}

}  // namespace

AlignmentResult itq_rotation(const MatrixXd& weights, const ItqConfig& cfg) {
  if (weights.rows() < 1 || weights.cols() < 1) throw std::invalid_argument("itq_rotation: empty proxy matrix");
  if (cfg.restarts < 1) throw std::invalid_argument("itq_rotation: restarts must be >= 1");
  if (cfg.max_iters < 1) throw std::invalid_argument("itq_rotation: max_iters must be >= 1");

  RestartOutcome best = run_restart(weights, cfg, 0);
  int best_index = 0;
  for (int r = 1; r < cfg.restarts; ++r) {
    RestartOutcome cand = run_restart(weights, cfg, static_cast<std::uint64_t>(r));
    if (cand.error < best.error) {
      best = std::move(cand);
      best_index = r;
    }
  }
  return AlignmentResult{RotationMatrix(std::move(best.rotation)), std::move(best.trace), best_index};
}

AlignmentResult itq_rotation(const ProxySet& proxies, const ItqConfig& cfg) {
  if (is_binary(proxies.kind())) {
    throw std::invalid_argument("itq_rotation: expects real-valued proxies, got " + std::string(to_string(proxies.kind())));
  }
  return itq_rotation(proxies.weights(), cfg);
}

double quantization_error(const RotationMatrix& rotation, const MatrixXd& weights) {
  check_dims(rotation, weights);
  return residual(rotation.matrix() * weights);
}

double quantization_error(const RotationMatrix& rotation, const ProxySet& proxies) {
  return quantization_error(rotation, proxies.weights());
}

double l1_mass(const RotationMatrix& rotation, const MatrixXd& weights) {
  check_dims(rotation, weights);
  return (rotation.matrix() * weights).cwiseAbs().sum();
}

ProxySet rotate(const RotationMatrix& rotation, const ProxySet& proxies) {
  check_dims(rotation, proxies.weights());
  if (is_binary(proxies.kind())) throw std::invalid_argument("rotate: expects real-valued proxies");
  MatrixXd rotated = rotation.matrix() * proxies.weights();
  for (Eigen::Index c = 0; c < rotated.cols(); ++c) rotated.col(c).normalize();
  return ProxySet(std::move(rotated), ProxyKind::aligned);
}

int count_duplicate_columns(const MatrixXd& weights) {
  int dups = 0;
  for (Eigen::Index i = 0; i < weights.cols(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (weights.col(i) == weights.col(j)) {
        ++dups;
        break;
      }
    }
  }
  return dups;
}

ProxySet binarize(const RotationMatrix& rotation, const ProxySet& proxies, Warnings* warnings) {
  check_dims(rotation, proxies.weights());
  if (is_binary(proxies.kind())) throw std::invalid_argument("binarize: expects real-valued proxies");
  MatrixXd codes = sign_matrix(rotation.matrix() * proxies.weights());
  if (const int dups = count_duplicate_columns(codes); dups > 0) {
    warn(warnings, "binarize: " + std::to_string(dups) + " proxy column(s) collapsed onto an earlier code");
  }
  return ProxySet(std::move(codes), ProxyKind::hclm);
}

}  // namespace proxyhash
