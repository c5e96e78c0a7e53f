#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "proxyhash/common.hpp"

namespace proxyhash::testing {

inline constexpr double kFdStep = 1e-5;

// Central differences of f over every entry of x.
inline MatrixXd numeric_gradient(const std::function<double(const MatrixXd&)>& f, MatrixXd x, double h = kFdStep) {
  MatrixXd g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = f(x);
    x.data()[i] = keep - h;
    const double down = f(x);
    x.data()[i] = keep;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Max over entries of |a - n| / max(|a|, |n|, floor).
inline double max_relative_error(const MatrixXd& analytic, const MatrixXd& numeric, double floor = 1e-3) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic.data()[i];
    const double n = numeric.data()[i];
    worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
  }
  return worst;
}

inline VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  return gaussian_matrix(n, 1, rng).col(0) * scale;
}

}  // namespace proxyhash::testing
