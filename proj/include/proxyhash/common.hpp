#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace proxyhash {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Non-fatal conditions (non-convergence, collapsed classes, degenerate
// similarities) are appended here instead of failing the call.
struct Warnings {
  std::vector<std::string> messages;

  void add(std::string message) { messages.push_back(std::move(message)); }
  bool empty() const noexcept { return messages.empty(); }
};

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->add(std::move(message));
}

// Independent, reproducible stream for (seed, stream) pairs; used so that
// restart r of a solver does not depend on how many draws restart r-1 made.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

// sgn(0) := +1 everywhere; this is what makes encoding bit-exact.
inline double sign_of(double x) noexcept { return x >= 0.0 ? 1.0 : -1.0; }

inline MatrixXd sign_matrix(const MatrixXd& m) {
  return m.unaryExpr([](double x) { return sign_of(x); });
}

MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

// Haar-distributed orthogonal matrix from the QR factorization of a Gaussian matrix.
MatrixXd random_orthogonal(Eigen::Index d, std::mt19937_64& rng);

}  // namespace proxyhash
