#include "proxyhash/kernels/kernels.hpp"

#include <bit>

namespace proxyhash::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

std::uint32_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i < words; ++i) sum += static_cast<std::uint32_t>(std::popcount(a[i] ^ b[i]));
  return sum;
}

void hamming_batch(const std::uint64_t* query, const std::uint64_t* codes, std::size_t n,
                   std::size_t words, std::uint32_t* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = hamming(query, codes + i * words, words);
}

}  // namespace proxyhash::kernels::scalar
