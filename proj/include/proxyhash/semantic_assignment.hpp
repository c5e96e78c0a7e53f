#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "proxyhash/common.hpp"
#include "proxyhash/dataset.hpp"
#include "proxyhash/proxy_set.hpp"

namespace proxyhash {

enum class SimilaritySource : std::uint8_t { gaussian_means, tag_cooccurrence, user_supplied };

/// Symmetric C x C class similarity with entries in [0, 1]. The diagonal is
/// never read by any consumer.
class SimilarityMatrix {
 public:
  SimilarityMatrix(MatrixXd values, SimilaritySource source);

  const MatrixXd& values() const noexcept { return values_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
  int classes() const noexcept { return static_cast<int>(values_.rows()); }
  SimilaritySource source() const noexcept { return source_; }

 private:
  MatrixXd values_;
  SimilaritySource source_;
};

struct ClassMeans {
  MatrixXd means;  // D x C, column y is u_y
  std::vector<std::size_t> counts;
};

/// Per-class average of the raw input features. Every class in [0, classes)
/// must have a sample; pass classes = -1 to use the dataset's label range.
ClassMeans class_means(const FeatureDataset& data, int classes = -1);

/// s_ij = exp(-||u_i - u_j||^2 / (2 kappa^2)), kappa = mean of ||u_i - u_j|| over i < j.
SimilarityMatrix gaussian_similarity(const ClassMeans& means, Warnings* warnings = nullptr);

/// s_ij = 2 sum_n t_ni t_nj / (sum_n t_ni + sum_n t_nj).
SimilarityMatrix tag_cooccurrence_similarity(const TagMatrix& tags);

/// Class index -> proxy column; always a bijection.
class Assignment {
 public:
  explicit Assignment(std::vector<int> map);
  static Assignment identity(int classes);

  const std::vector<int>& map() const noexcept { return map_; }
  int operator[](std::size_t cls) const { return map_[cls]; }
  int size() const noexcept { return static_cast<int>(map_.size()); }

  bool operator==(const Assignment&) const = default;

 private:
  std::vector<int> map_;
};

/// sum_{i != j} s_ij (1 - <w_{a(i)}, w_{a(j)}>) with raw dot products.
double assignment_objective(const SimilarityMatrix& similarity, const ProxySet& proxies, const Assignment& assignment);

struct GreedyResult {
  Assignment assignment;
  double objective = 0.0;
  double initial_objective = 0.0;    // of the winning restart's random start
  std::vector<double> trace;         // objective after each accepted swap, winning restart
  int best_restart = 0;
};

/// Steepest-descent pairwise swaps from random permutations; best of restarts.
GreedyResult greedy_assign(const SimilarityMatrix& similarity, const ProxySet& proxies, int restarts, std::uint64_t seed);

/// Exhaustive search over all C! assignments (C <= 9). Ties resolve to the
/// lexicographically smallest permutation.
Assignment brute_force_assign(const SimilarityMatrix& similarity, const ProxySet& proxies);

}  // namespace proxyhash
