#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "proxyhash/binary_codes.hpp"
#include "proxyhash/common.hpp"

namespace proxyhash {

struct ClassifierConfig {
  int iterations = 300;
  double learning_rate = 0.5;
  double l2 = 1e-4;
};

/// Mean multinomial cross-entropy of softmax(W [x; 1]) plus (l2/2)||W||^2
/// (bias column excluded). weights: C x (d+1), inputs: d x n, targets in [0, C).
/// Accumulates the gradient into `grad` when non-null.
double classifier_loss(const MatrixXd& weights, const MatrixXd& inputs, std::span<const int> targets, double l2,
                       MatrixXd* grad = nullptr);

/// Softmax regression on +-1 code vectors, trained by full-batch gradient descent.
class CodeClassifier {
 public:
  /// Labels may be any integers; they are mapped to contiguous indices internally.
  static CodeClassifier fit(const BinaryCodes& codes, std::span<const int> labels, const ClassifierConfig& cfg = {});

  int predict(std::span<const std::uint64_t> code, int bits) const;
  std::vector<int> predict(const BinaryCodes& codes) const;
  double accuracy(const BinaryCodes& codes, std::span<const int> labels) const;

  const MatrixXd& weights() const noexcept { return weights_; }
  const std::vector<int>& classes() const noexcept { return classes_; }

 private:
  MatrixXd weights_;          // C x (d+1)
  std::vector<int> classes_;  // internal index -> original label
};

}  // namespace proxyhash
