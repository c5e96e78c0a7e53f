// Compiled with -mavx2 -mfma -mpopcnt; only reached when the CPU reports
// those features (see dispatch.cpp).
#include "proxyhash/kernels/kernels.hpp"

#include <immintrin.h>

namespace proxyhash::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

// Nibble-table popcount (Mula); returns four 64-bit lane counts.
inline __m256i popcount_epi64(__m256i v) {
  const __m256i table = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                         0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  __m256i lo = _mm256_and_si256(v, low_mask);
  __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
  __m256i counts = _mm256_add_epi8(_mm256_shuffle_epi8(table, lo), _mm256_shuffle_epi8(table, hi));
  return _mm256_sad_epu8(counts, _mm256_setzero_si256());
}

inline std::uint64_t hsum_epi64(__m256i v) {
  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
  return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

std::uint32_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  std::size_t i = 0;
  std::uint64_t sum = 0;
  if (words >= 8) {
    __m256i acc = _mm256_setzero_si256();
    for (; i + 4 <= words; i += 4) {
      __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
      __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
      acc = _mm256_add_epi64(acc, popcount_epi64(_mm256_xor_si256(va, vb)));
    }
    sum = hsum_epi64(acc);
  }
  for (; i < words; ++i) sum += static_cast<std::uint64_t>(_mm_popcnt_u64(a[i] ^ b[i]));
  return static_cast<std::uint32_t>(sum);
}

void hamming_batch(const std::uint64_t* query, const std::uint64_t* codes, std::size_t n,
                   std::size_t words, std::uint32_t* out) {
  if (words == 1) {
    // Four single-word codes per vector.
    const __m256i q = _mm256_set1_epi64x(static_cast<long long>(query[0]));
    std::size_t i = 0;
    alignas(32) std::uint64_t lanes[4];
    for (; i + 4 <= n; i += 4) {
      __m256i c = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(codes + i));
      _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), popcount_epi64(_mm256_xor_si256(c, q)));
      for (int k = 0; k < 4; ++k) out[i + k] = static_cast<std::uint32_t>(lanes[k]);
    }
    for (; i < n; ++i) out[i] = static_cast<std::uint32_t>(_mm_popcnt_u64(codes[i] ^ query[0]));
    return;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = hamming(query, codes + i * words, words);
}

}  // namespace proxyhash::kernels::avx2
