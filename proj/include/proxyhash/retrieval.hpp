#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "proxyhash/binary_codes.hpp"

namespace proxyhash {

/// Database indices by ascending Hamming distance; ties by ascending index.
struct RankedList {
  std::vector<std::size_t> indices;
  std::vector<std::uint32_t> distances;
};

/// `exclude` drops one database item (the query itself when queries are
/// drawn from the database).
RankedList rank(std::span<const std::uint64_t> query, const BinaryCodes& database,
                std::optional<std::size_t> exclude = std::nullopt);

struct AveragePrecision {
  double value = 0.0;
  bool no_relevant = false;  // no relevant item inside the evaluated prefix
};

/// sum_k P(k) delta_r(k) over the first top_n entries (0 = all). Recall is
/// normalized by the relevant count inside that prefix.
AveragePrecision average_precision(std::span<const std::uint8_t> relevance, std::size_t top_n = 0);

struct RetrievalOptions {
  std::size_t top_n = 0;          // 0 = full ranking
  bool queries_in_database = false;  // query i is database item i; excluded from its own ranking
};

struct MeanApResult {
  double map = 0.0;
  std::vector<double> per_query;
  std::size_t queries_without_relevant = 0;
};

MeanApResult mean_ap(const BinaryCodeDatabase& queries, const BinaryCodeDatabase& database,
                     const RetrievalOptions& options = {});

/// Mean over queries of the fraction of relevant items among the top K.
std::vector<double> precision_at_k(const BinaryCodeDatabase& queries, const BinaryCodeDatabase& database,
                                   std::span<const std::size_t> ks, const RetrievalOptions& options = {});

/// Fixed-edge histogram over [lo, hi); values outside are clamped into the end bins.
struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::uint64_t> counts;

  Histogram() = default;
  Histogram(double lo_, double hi_, std::size_t bins) : lo(lo_), hi(hi_), counts(bins, 0) {}
  void add(double value);
  std::uint64_t total() const;

  bool operator==(const Histogram&) const = default;
};

/// Per-coordinate |nu_j - sgn(nu_j)| over all embeddings: 64 bins on [0, 2].
Histogram binarization_error_histogram(const MatrixXd& embeddings);
/// Mean over samples of ||nu - sgn(nu)||^2 / d.
double mean_binarization_error(const MatrixXd& embeddings);
/// Proxy weights scaled by sqrt(d / K) so +-1 proxies land on +-1: 64 bins on [-2, 2].
Histogram proxy_weight_histogram(const MatrixXd& weights, double norm_constant);

}  // namespace proxyhash
