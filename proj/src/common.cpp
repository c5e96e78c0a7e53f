#include "proxyhash/common.hpp"

namespace proxyhash {

MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd m(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
  return m;
}

MatrixXd random_orthogonal(Eigen::Index d, std::mt19937_64& rng) {
  const MatrixXd g = gaussian_matrix(d, d, rng);
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ();
  const MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  }
  return q;
}

}  // namespace proxyhash
