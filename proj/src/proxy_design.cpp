#include "proxyhash/proxy_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace proxyhash {

namespace {

struct SmoothedMin {
  double value;
  double hard_min;
};

// Smoothed min over pairwise squared distances; fills `grad` (d x C) with the
// Euclidean gradient when non-null.
SmoothedMin smoothed_min(const MatrixXd& w, double beta, MatrixXd* grad) {
  const MatrixXd gram = w.transpose() * w;
  const Eigen::Index c = w.cols();
  double hard = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < c; ++i)
    for (Eigen::Index j = i + 1; j < c; ++j) hard = std::min(hard, gram(i, i) + gram(j, j) - 2.0 * gram(i, j));

  double total = 0.0;
  MatrixXd weights = MatrixXd::Zero(c, c);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = i + 1; j < c; ++j) {
      const double dist = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
      const double e = std::exp(-beta * (dist - hard));
      weights(i, j) = e;
      weights(j, i) = e;
      total += e;
    }
  }
  if (grad != nullptr) {
    weights /= total;
    // d f / d w_i = sum_j a_ij * 2 (w_i - w_j)
    const VectorXd row_sums = weights.rowwise().sum();
    *grad = 2.0 * (w * row_sums.asDiagonal() - w * weights);
  }
  return {hard - std::log(total) / beta, hard};
}

void normalize_columns(MatrixXd& w) {
  for (Eigen::Index c = 0; c < w.cols(); ++c) w.col(c).normalize();
}

struct RestartOutcome {
  MatrixXd best;
  double best_min = -1.0;
  bool converged = true;
  std::vector<double> trace;
};

RestartOutcome run_restart(int classes, int bits, const TammesConfig& cfg, std::uint64_t stream) {
  auto rng = make_rng(cfg.seed, stream);
  MatrixXd w = gaussian_matrix(bits, classes, rng);
  normalize_columns(w);

  RestartOutcome out;
  out.best = w;
  out.best_min = min_pairwise_sq_distance(w);
  out.trace.push_back(out.best_min);

  const int stages = std::max(1, cfg.stages);
  const int iters_per_stage = std::max(1, cfg.max_iters / stages);
  const double ratio = stages > 1 ? std::pow(cfg.sharpness_end / cfg.sharpness_start, 1.0 / (stages - 1)) : 1.0;

  MatrixXd grad;
  double beta = cfg.sharpness_start;
  for (int stage = 0; stage < stages; ++stage, beta *= ratio) {
    double step = cfg.step_size;
    SmoothedMin current = smoothed_min(w, beta, &grad);
    bool stage_done = false;
    for (int it = 0; it < iters_per_stage; ++it) {
      // Riemannian gradient: drop the radial component of every column.
      for (Eigen::Index c = 0; c < w.cols(); ++c) grad.col(c) -= grad.col(c).dot(w.col(c)) * w.col(c);
      MatrixXd candidate = w + step * grad;
      normalize_columns(candidate);
      MatrixXd candidate_grad;
      const SmoothedMin next = smoothed_min(candidate, beta, &candidate_grad);
      if (next.value > current.value) {
        const double gain = next.value - current.value;
        w = std::move(candidate);
        grad = std::move(candidate_grad);
        current = next;
        step *= 1.5;
        if (current.hard_min > out.best_min) {
          out.best_min = current.hard_min;
          out.best = w;
          out.trace.push_back(out.best_min);
        }
        if (gain < cfg.tolerance) {
          stage_done = true;
          break;
        }
      } else {
        step *= 0.5;
        if (step < 1e-14) {
          stage_done = true;
          break;
        }
      }
    }
    if (!stage_done) out.converged = false;
  }
  return out;
}

}  // namespace

double min_pairwise_sq_distance(const MatrixXd& weights) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < weights.cols(); ++i)
    for (Eigen::Index j = i + 1; j < weights.cols(); ++j)
      best = std::min(best, (weights.col(i) - weights.col(j)).squaredNorm());
  return best;
}

TammesResult solve_tammes(int classes, int bits, const TammesConfig& cfg, Warnings* warnings) {
  if (classes < 2) throw std::invalid_argument("solve_tammes: need at least 2 classes");
  if (bits < 1) throw std::invalid_argument("solve_tammes: dimension must be at least 1");
  if (cfg.restarts < 1) throw std::invalid_argument("solve_tammes: restarts must be >= 1");
  if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("solve_tammes: tolerance must be > 0");
  if (!(cfg.sharpness_start > 0.0) || !(cfg.sharpness_end > 0.0) || !(cfg.step_size > 0.0)) {
    throw std::invalid_argument("solve_tammes: step size and sharpness must be > 0");
  }

  std::vector<RestartOutcome> outcomes;
  outcomes.reserve(static_cast<std::size_t>(cfg.restarts));
  for (int r = 0; r < cfg.restarts; ++r) outcomes.push_back(run_restart(classes, bits, cfg, static_cast<std::uint64_t>(r)));

  // Strict comparison: the lowest restart index wins ties.
  int best = 0;
  for (int r = 1; r < cfg.restarts; ++r) {
    if (outcomes[r].best_min > outcomes[best].best_min) best = r;
  }
  RestartOutcome& win = outcomes[static_cast<std::size_t>(best)];
  if (!win.converged) {
    warn(warnings, "solve_tammes: iteration cap reached before convergence; returning best iterate");
  }
  // Columns are renormalized once more so the norm invariant holds to rounding.
  normalize_columns(win.best);
  return TammesResult{ProxySet(win.best, ProxyKind::tammes), min_pairwise_sq_distance(win.best), best,
                      win.converged, std::move(win.trace)};
}

VectorXd margins(const ProxySet& proxies) {
  const MatrixXd gram = proxies.weights().transpose() * proxies.weights();
  const Eigen::Index c = gram.rows();
  VectorXd out(c);
  for (Eigen::Index y = 0; y < c; ++y) {
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < c; ++k)
      if (k != y) worst = std::max(worst, gram(y, k));
    out(y) = proxies.norm_constant() - worst;
  }
  return out;
}

ProxySet random_proxies(int classes, int bits, std::uint64_t seed) {
  if (classes < 2 || bits < 1) throw std::invalid_argument("random_proxies: need classes >= 2 and bits >= 1");
  auto rng = make_rng(seed, 0x52414e44);
  MatrixXd w = gaussian_matrix(bits, classes, rng);
  normalize_columns(w);
  return ProxySet(std::move(w), ProxyKind::random);
}

ProxySet random_binary_proxies(int classes, int bits, std::uint64_t seed) {
  if (classes < 2 || bits < 1) throw std::invalid_argument("random_binary_proxies: need classes >= 2 and bits >= 1");
  if (bits < 63 && static_cast<std::uint64_t>(classes) > (std::uint64_t{1} << bits)) {
    throw std::invalid_argument("random_binary_proxies: " + std::to_string(classes) +
                                " classes exceed the 2^" + std::to_string(bits) + " binary codes");
  }
  auto rng = make_rng(seed, 0x42494e41);
  std::bernoulli_distribution coin(0.5);
  MatrixXd w(bits, classes);
  for (Eigen::Index c = 0; c < w.cols(); ++c)
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = coin(rng) ? 1.0 : -1.0;
  return ProxySet(std::move(w), ProxyKind::random_binary);
}

}  // namespace proxyhash
