#include "proxyhash/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "proxyhash/kernels/kernels.hpp"

namespace proxyhash {

RankedList rank(std::span<const std::uint64_t> query, const BinaryCodes& database, std::optional<std::size_t> exclude) {
  if (query.size() != database.words_per_code()) throw std::invalid_argument("rank: query length mismatch");
  const std::size_t n = database.size();
  std::vector<std::uint32_t> dist(n);
  kernels::active().hamming_batch(query.data(), database.words().data(), n, database.words_per_code(), dist.data());

  // Counting sort on distance; scanning indices in order keeps ties stable.
  const auto max_d = static_cast<std::size_t>(database.bits());
  std::vector<std::size_t> offsets(max_d + 2, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (!exclude || *exclude != i) ++offsets[dist[i] + 1];
  for (std::size_t k = 1; k < offsets.size(); ++k) offsets[k] += offsets[k - 1];
  const std::size_t kept = offsets.back();
  RankedList out{std::vector<std::size_t>(kept), std::vector<std::uint32_t>(kept)};
  for (std::size_t i = 0; i < n; ++i) {
    if (exclude && *exclude == i) continue;
    const std::size_t slot = offsets[dist[i]]++;
    out.indices[slot] = i;
    out.distances[slot] = dist[i];
  }
  return out;
}

AveragePrecision average_precision(std::span<const std::uint8_t> relevance, std::size_t top_n) {
  const std::size_t limit = top_n == 0 ? relevance.size() : std::min(top_n, relevance.size());
  std::size_t relevant_total = 0;
  for (std::size_t k = 0; k < limit; ++k) relevant_total += relevance[k] ? 1 : 0;
  if (relevant_total == 0) return {0.0, true};
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < limit; ++k) {
    if (!relevance[k]) continue;
    ++hits;
    // P(k) * delta_r(k), delta_r = 1/R at each hit.
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return {sum / static_cast<double>(relevant_total), false};
}

namespace {

void check_pair(const BinaryCodeDatabase& queries, const BinaryCodeDatabase& database, const RetrievalOptions& opt) {
  if (queries.codes.size() == 0) throw std::invalid_argument("empty query set");
  if (database.codes.size() == 0) throw std::invalid_argument("empty database");
  if (queries.codes.bits() != database.codes.bits()) throw std::invalid_argument("query/database code lengths differ");
  if (opt.queries_in_database && queries.codes.size() > database.codes.size()) {
    throw std::invalid_argument("queries_in_database requires query i to be database item i");
  }
}

std::vector<std::uint8_t> relevance_of(const BinaryCodeDatabase& queries, const BinaryCodeDatabase& database,
                                       std::size_t q, const RankedList& ranked, std::size_t limit) {
  std::vector<std::uint8_t> rel(limit);
  for (std::size_t k = 0; k < limit; ++k) rel[k] = database.relevant_to(queries, q, ranked.indices[k]) ? 1 : 0;
  return rel;
}

}  // namespace

MeanApResult mean_ap(const BinaryCodeDatabase& queries, const BinaryCodeDatabase& database,
                     const RetrievalOptions& options) {
  check_pair(queries, database, options);
  MeanApResult out;
  out.per_query.reserve(queries.codes.size());
  double total = 0.0;
  for (std::size_t q = 0; q < queries.codes.size(); ++q) {
    const auto exclude = options.queries_in_database ? std::optional<std::size_t>(q) : std::nullopt;
    const RankedList ranked = rank(queries.codes.code(q), database.codes, exclude);
    const std::size_t limit =
        options.top_n == 0 ? ranked.indices.size() : std::min(options.top_n, ranked.indices.size());
    const AveragePrecision ap = average_precision(relevance_of(queries, database, q, ranked, limit));
    if (ap.no_relevant) ++out.queries_without_relevant;
    out.per_query.push_back(ap.value);
    total += ap.value;
  }
  out.map = total / static_cast<double>(queries.codes.size());
  return out;
}

std::vector<double> precision_at_k(const BinaryCodeDatabase& queries, const BinaryCodeDatabase& database,
                                   std::span<const std::size_t> ks, const RetrievalOptions& options) {
  check_pair(queries, database, options);
  std::vector<double> sums(ks.size(), 0.0);
  for (std::size_t q = 0; q < queries.codes.size(); ++q) {
    const auto exclude = options.queries_in_database ? std::optional<std::size_t>(q) : std::nullopt;
    const RankedList ranked = rank(queries.codes.code(q), database.codes, exclude);
    std::size_t hits = 0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const std::size_t k = std::min(ks[i], ranked.indices.size());
      if (k == 0) throw std::invalid_argument("precision_at_k: K must be >= 1");
      if (i > 0 && ks[i] < ks[i - 1]) throw std::invalid_argument("precision_at_k: Ks must be ascending");
      for (; pos < k; ++pos) hits += database.relevant_to(queries, q, ranked.indices[pos]) ? 1 : 0;
      sums[i] += static_cast<double>(hits) / static_cast<double>(k);
    }
  }
  for (auto& s : sums) s /= static_cast<double>(queries.codes.size());
  return sums;
}

void Histogram::add(double value) {
  const auto bins = static_cast<double>(counts.size());
  auto idx = static_cast<long long>(std::floor((value - lo) / (hi - lo) * bins));
  idx = std::clamp<long long>(idx, 0, static_cast<long long>(counts.size()) - 1);
  ++counts[static_cast<std::size_t>(idx)];
}

std::uint64_t Histogram::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

Histogram binarization_error_histogram(const MatrixXd& embeddings) {
  Histogram h(0.0, 2.0, 64);
  for (Eigen::Index i = 0; i < embeddings.size(); ++i) {
    const double v = embeddings.data()[i];
    h.add(std::abs(v - sign_of(v)));
  }
  return h;
}

double mean_binarization_error(const MatrixXd& embeddings) {
  if (embeddings.size() == 0) return 0.0;
  return (embeddings - sign_matrix(embeddings)).squaredNorm() / static_cast<double>(embeddings.size());
}

Histogram proxy_weight_histogram(const MatrixXd& weights, double norm_constant) {
  Histogram h(-2.0, 2.0, 64);
  const double scale = std::sqrt(static_cast<double>(weights.rows()) / norm_constant);
  for (Eigen::Index i = 0; i < weights.size(); ++i) h.add(weights.data()[i] * scale);
  return h;
}

}  // namespace proxyhash
