#pragma once

#include <cstdint>
#include <vector>

#include "proxyhash/common.hpp"
#include "proxyhash/proxy_set.hpp"

namespace proxyhash {

/// Settings for the spherical-code (Tammes) solver.
///
/// The solver maximizes a smoothed minimum of pairwise squared distances,
///   f_beta(W) = -(1/beta) log sum_{i<j} exp(-beta ||w_i - w_j||^2),
/// by projected gradient ascent on the unit sphere. beta is annealed
/// geometrically from sharpness_start to sharpness_end over `stages` stages.
struct TammesConfig {
  int restarts = 8;
  int max_iters = 20000;  // total ascent steps per restart, split across stages
  int stages = 12;
  double step_size = 0.1;
  double sharpness_start = 4.0;
  double sharpness_end = 4000.0;
  double tolerance = 1e-12;  // per-stage stop on smoothed-objective change
  std::uint64_t seed = 0;
};

struct TammesResult {
  ProxySet proxies;
  double min_sq_distance = 0.0;
  int best_restart = 0;
  // False when some stage of the winning restart hit its iteration cap.
  bool converged = true;
  // Hard min-distance of each new incumbent of the winning restart.
  std::vector<double> incumbent_trace;
};

TammesResult solve_tammes(int classes, int bits, const TammesConfig& cfg, Warnings* warnings = nullptr);

double min_pairwise_sq_distance(const MatrixXd& weights);

/// M_y = K - max_{c != y} <w_y, w_c>.
VectorXd margins(const ProxySet& proxies);

/// Unit-norm Gaussian directions.
ProxySet random_proxies(int classes, int bits, std::uint64_t seed);

/// I.i.d. uniform +-1 entries; rejects classes > 2^bits.
ProxySet random_binary_proxies(int classes, int bits, std::uint64_t seed);

}  // namespace proxyhash
