#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "proxyhash/kernels/kernels.hpp"

namespace proxyhash::kernels {

namespace {

constexpr KernelTable kScalarTable{Isa::scalar, &scalar::dot, &scalar::axpy, &scalar::hamming,
                                   &scalar::hamming_batch};

#if defined(PROXYHASH_HAVE_AVX2)
constexpr KernelTable kAvx2Table{Isa::avx2, &avx2::dot, &avx2::axpy, &avx2::hamming,
                                 &avx2::hamming_batch};
#endif

bool cpu_has_avx2() noexcept {
#if defined(PROXYHASH_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma") &&
         __builtin_cpu_supports("popcnt");
#else
  return false;
#endif
}

const KernelTable* select_initial() {
  if (const char* env = std::getenv("PROXYHASH_ISA")) {
    const std::string want(env);
    if (want == "scalar") return &kScalarTable;
    if (want == "avx2" && isa_available(Isa::avx2)) return &table_for(Isa::avx2);
  }
  return isa_available(Isa::avx2) ? &table_for(Isa::avx2) : &kScalarTable;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{select_initial()};
  return table;
}

}  // namespace

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

std::string_view isa_name(Isa isa) noexcept {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

const KernelTable& table_for(Isa isa) {
  if (!isa_available(isa)) throw std::runtime_error("kernel ISA not available: " + std::string(isa_name(isa)));
#if defined(PROXYHASH_HAVE_AVX2)
  if (isa == Isa::avx2) return kAvx2Table;
#endif
  return kScalarTable;
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

void force_isa(Isa isa) { current().store(&table_for(isa), std::memory_order_release); }

}  // namespace proxyhash::kernels
