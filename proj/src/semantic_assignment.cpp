#include "proxyhash/semantic_assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

namespace proxyhash {

SimilarityMatrix::SimilarityMatrix(MatrixXd values, SimilaritySource source)
    : values_(std::move(values)), source_(source) {
  if (values_.rows() != values_.cols() || values_.rows() < 1) throw std::invalid_argument("similarity must be square");
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      const double v = values_(i, j);
      if (i != j && !(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("similarity entry (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") outside [0,1]");
      }
      if (std::abs(v - values_(j, i)) > 1e-12) throw std::invalid_argument("similarity matrix is not symmetric");
    }
  }
}

ClassMeans class_means(const FeatureDataset& data, int classes) {
  if (!data.labels) throw std::invalid_argument("class_means: dataset has no single labels");
  const int c = classes < 0 ? data.num_classes() : classes;
  const auto d = static_cast<Eigen::Index>(data.dim());
  ClassMeans out{MatrixXd::Zero(d, c), std::vector<std::size_t>(static_cast<std::size_t>(c), 0)};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int y = (*data.labels)[i];
    if (y < 0 || y >= c) throw std::invalid_argument("class_means: label out of range at row " + std::to_string(i));
    const auto row = data.features.row(i);
    for (Eigen::Index k = 0; k < d; ++k) out.means(k, y) += row[static_cast<std::size_t>(k)];
    ++out.counts[static_cast<std::size_t>(y)];
  }
  for (int y = 0; y < c; ++y) {
    if (out.counts[static_cast<std::size_t>(y)] == 0) {
      throw std::invalid_argument("class_means: class " + std::to_string(y + 1) + " has no samples");
    }
    out.means.col(y) /= static_cast<double>(out.counts[static_cast<std::size_t>(y)]);
  }
  return out;
}

SimilarityMatrix gaussian_similarity(const ClassMeans& means, Warnings* warnings) {
  const Eigen::Index c = means.means.cols();
  if (c < 2) throw std::invalid_argument("gaussian_similarity: need at least 2 classes");
  MatrixXd sq(c, c);
  double dist_sum = 0.0;
  for (Eigen::Index i = 0; i < c; ++i) {
    sq(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < c; ++j) {
      const double s = (means.means.col(i) - means.means.col(j)).squaredNorm();
      sq(i, j) = sq(j, i) = s;
      dist_sum += std::sqrt(s);
    }
  }
  const double kappa = dist_sum / (static_cast<double>(c) * static_cast<double>(c - 1) / 2.0);
  if (kappa == 0.0) {
    warn(warnings, "gaussian_similarity: all class means coincide; using all-ones similarity");
    return SimilarityMatrix(MatrixXd::Ones(c, c), SimilaritySource::gaussian_means);
  }
  MatrixXd s = (-sq / (2.0 * kappa * kappa)).array().exp().matrix();
  return SimilarityMatrix(std::move(s), SimilaritySource::gaussian_means);
}

SimilarityMatrix tag_cooccurrence_similarity(const TagMatrix& tags) {
  const auto t = static_cast<Eigen::Index>(tags.cols);
  std::vector<double> freq(tags.cols, 0.0);
  MatrixXd co = MatrixXd::Zero(t, t);
  for (std::size_t n = 0; n < tags.rows; ++n) {
    for (std::size_t i = 0; i < tags.cols; ++i) {
      if (!tags(n, i)) continue;
      freq[i] += 1.0;
      for (std::size_t j = i + 1; j < tags.cols; ++j)
        if (tags(n, j)) co(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += 1.0;
    }
  }
  for (std::size_t i = 0; i < tags.cols; ++i) {
    if (freq[i] == 0.0) throw std::invalid_argument("tag_cooccurrence_similarity: tag " + std::to_string(i + 1) + " never occurs");
  }
  MatrixXd s = MatrixXd::Ones(t, t);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = i + 1; j < t; ++j) {
      s(i, j) = s(j, i) = 2.0 * co(i, j) / (freq[static_cast<std::size_t>(i)] + freq[static_cast<std::size_t>(j)]);
    }
  }
  return SimilarityMatrix(std::move(s), SimilaritySource::tag_cooccurrence);
}

Assignment::Assignment(std::vector<int> map) : map_(std::move(map)) {
  std::vector<bool> seen(map_.size(), false);
  for (int v : map_) {
    if (v < 0 || static_cast<std::size_t>(v) >= map_.size() || seen[static_cast<std::size_t>(v)]) {
      throw std::invalid_argument("assignment is not a permutation");
    }
    seen[static_cast<std::size_t>(v)] = true;
  }
}

Assignment Assignment::identity(int classes) {
  std::vector<int> m(static_cast<std::size_t>(classes));
  std::iota(m.begin(), m.end(), 0);
  return Assignment(std::move(m));
}

namespace {

void check_compatible(const SimilarityMatrix& s, const ProxySet& p) {
  if (s.classes() != p.classes()) {
    throw std::invalid_argument("similarity has " + std::to_string(s.classes()) + " classes but proxy set has " +
                                std::to_string(p.classes()));
  }
}

double objective(const MatrixXd& s, const MatrixXd& gram, const std::vector<int>& a) {
  double total = 0.0;
  const auto c = static_cast<Eigen::Index>(a.size());
  for (Eigen::Index i = 0; i < c; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      if (i != j) total += s(i, j) * (1.0 - gram(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)]));
  return total;
}

// Objective change when the proxies of classes p and q are exchanged. Only
// rows/columns p and q of the assignment change, so this is O(C).
double swap_delta(const MatrixXd& s, const MatrixXd& gram, const std::vector<int>& a, std::size_t p, std::size_t q) {
  const int ap = a[p];
  const int aq = a[q];
  double delta = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (k == p || k == q) continue;
    const int ak = a[k];
    const auto kk = static_cast<Eigen::Index>(k);
    const auto pp = static_cast<Eigen::Index>(p);
    const auto qq = static_cast<Eigen::Index>(q);
    // Terms (p,k),(k,p) use gram(a_p, a_k) before and gram(a_q, a_k) after; likewise for q.
    delta -= (s(pp, kk) + s(kk, pp)) * (gram(aq, ak) - gram(ap, ak));
    delta -= (s(qq, kk) + s(kk, qq)) * (gram(ap, ak) - gram(aq, ak));
  }
  const auto pp = static_cast<Eigen::Index>(p);
  const auto qq = static_cast<Eigen::Index>(q);
  delta -= s(pp, qq) * (gram(aq, ap) - gram(ap, aq));
  delta -= s(qq, pp) * (gram(ap, aq) - gram(aq, ap));
  return delta;
}

}  // namespace

double assignment_objective(const SimilarityMatrix& similarity, const ProxySet& proxies, const Assignment& assignment) {
  check_compatible(similarity, proxies);
  if (assignment.size() != proxies.classes()) throw std::invalid_argument("assignment size mismatch");
  const MatrixXd gram = proxies.weights().transpose() * proxies.weights();
  return objective(similarity.values(), gram, assignment.map());
}

GreedyResult greedy_assign(const SimilarityMatrix& similarity, const ProxySet& proxies, int restarts, std::uint64_t seed) {
  check_compatible(similarity, proxies);
  if (restarts < 1) throw std::invalid_argument("greedy_assign: restarts must be >= 1");
  const MatrixXd gram = proxies.weights().transpose() * proxies.weights();
  const MatrixXd& s = similarity.values();
  const std::size_t c = static_cast<std::size_t>(proxies.classes());

  std::optional<GreedyResult> best;
  for (int r = 0; r < restarts; ++r) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(r));
    std::vector<int> a(c);
    std::iota(a.begin(), a.end(), 0);
    std::shuffle(a.begin(), a.end(), rng);

    double value = objective(s, gram, a);
    const double initial = value;
    std::vector<double> trace;
    // Accept only clear decreases so rounding noise cannot cycle.
    const double eps = 1e-12 * std::max(1.0, std::abs(value));
    while (true) {
      double best_delta = -eps;
      std::size_t bp = c;
      std::size_t bq = c;
      for (std::size_t p = 0; p < c; ++p) {
        for (std::size_t q = p + 1; q < c; ++q) {
          const double delta = swap_delta(s, gram, a, p, q);
          if (delta < best_delta) {
            best_delta = delta;
            bp = p;
            bq = q;
          }
        }
      }
      if (bp == c) break;
      std::swap(a[bp], a[bq]);
      value = objective(s, gram, a);
      trace.push_back(value);
    }
    if (!best || value < best->objective) {
      best = GreedyResult{Assignment(a), value, initial, std::move(trace), r};
    }
  }
  return std::move(*best);
}

Assignment brute_force_assign(const SimilarityMatrix& similarity, const ProxySet& proxies) {
  check_compatible(similarity, proxies);
  const int c = proxies.classes();
  if (c > 9) throw std::invalid_argument("brute_force_assign: " + std::to_string(c) + " classes exceeds the limit of 9");
  const MatrixXd gram = proxies.weights().transpose() * proxies.weights();
  std::vector<int> a(static_cast<std::size_t>(c));
  std::iota(a.begin(), a.end(), 0);
  std::vector<int> best = a;
  double best_value = objective(similarity.values(), gram, a);
  const double eps = 1e-12 * std::max(1.0, std::abs(best_value));
  while (std::next_permutation(a.begin(), a.end())) {
    const double v = objective(similarity.values(), gram, a);
    if (v < best_value - eps) {
      best_value = v;
      best = a;
    }
  }
  return Assignment(std::move(best));
}

}  // namespace proxyhash
