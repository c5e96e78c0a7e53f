#pragma once

// Data-parallel inner loops used by training (dot/axpy over f64) and by the
// retrieval engine (XOR + popcount over packed 64-bit code words).
//
// Every kernel has a scalar reference in kernels/scalar.cpp. Wider variants
// live in their own translation units compiled with ISA-specific flags and
// are chosen once at startup from CPU feature bits. The PROXYHASH_ISA
// environment variable (scalar|avx2) overrides the automatic choice.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace proxyhash::kernels {

enum class Isa : std::uint8_t { scalar, avx2 };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  std::uint32_t (*hamming)(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);
  // out[i] = hamming(query, codes + i * words) for i in [0, n).
  void (*hamming_batch)(const std::uint64_t* query, const std::uint64_t* codes, std::size_t n,
                        std::size_t words, std::uint32_t* out);
};

bool isa_available(Isa isa) noexcept;
std::string_view isa_name(Isa isa) noexcept;

const KernelTable& table_for(Isa isa);
const KernelTable& active() noexcept;

// Test hook; not thread-safe against concurrent kernel use.
void force_isa(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline std::uint32_t hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  return active().hamming(a.data(), b.data(), a.size());
}

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
std::uint32_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);
void hamming_batch(const std::uint64_t* query, const std::uint64_t* codes, std::size_t n,
                   std::size_t words, std::uint32_t* out);
}  // namespace scalar

#if defined(PROXYHASH_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
std::uint32_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);
void hamming_batch(const std::uint64_t* query, const std::uint64_t* codes, std::size_t n,
                   std::size_t words, std::uint32_t* out);
}  // namespace avx2
#endif

}  // namespace proxyhash::kernels
