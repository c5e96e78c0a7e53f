#include <gtest/gtest.h>

#include <bit>
#include <cstdlib>
#include <random>
#include <vector>

#include "proxyhash/kernels/kernels.hpp"

using namespace proxyhash::kernels;

namespace {

std::vector<std::uint64_t> random_words(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::uint64_t> out(n);
  for (auto& w : out) w = rng();
  return out;
}

std::uint32_t naive_hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  std::uint32_t d = 0;
  for (std::size_t w = 0; w < words; ++w)
    for (int j = 0; j < 64; ++j) d += ((a[w] >> j) & 1U) != ((b[w] >> j) & 1U);
  return d;
}

class KernelIsa : public ::testing::TestWithParam<Isa> {
 protected:
  void SetUp() override {
    if (!isa_available(GetParam())) GTEST_SKIP() << isa_name(GetParam()) << " not available on this CPU";
  }
  const KernelTable& table() const { return table_for(GetParam()); }
};

TEST_P(KernelIsa, HammingMatchesNaiveLoop) {
  std::mt19937_64 rng(11);
  for (std::size_t words : {1u, 2u, 3u, 4u, 5u, 8u, 17u}) {
    for (int t = 0; t < 200; ++t) {
      const auto a = random_words(words, rng);
      const auto b = random_words(words, rng);
      ASSERT_EQ(table().hamming(a.data(), b.data(), words), naive_hamming(a.data(), b.data(), words));
    }
  }
}

TEST_P(KernelIsa, HammingBatchMatchesSingle) {
  std::mt19937_64 rng(12);
  for (std::size_t words : {1u, 2u, 3u, 7u}) {
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 37u}) {
      const auto q = random_words(words, rng);
      const auto codes = random_words(words * n, rng);
      std::vector<std::uint32_t> out(n, 999);
      table().hamming_batch(q.data(), codes.data(), n, words, out.data());
      for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(out[i], naive_hamming(q.data(), codes.data() + i * words, words));
    }
  }
}

TEST_P(KernelIsa, DotAndAxpyAgreeWithScalarReference) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 1000u}) {
    std::vector<double> a(n), b(n), y(n), y_ref(n);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = g(rng);
      b[i] = g(rng);
      y[i] = y_ref[i] = g(rng);
      mag += std::abs(a[i] * b[i]);
    }
    // Summation order differs across ISAs; bound by the conditioning of the sum.
    EXPECT_NEAR(table().dot(a.data(), b.data(), n), scalar::dot(a.data(), b.data(), n), 1e-14 * (1.0 + mag));
    table().axpy(0.37, a.data(), y.data(), n);
    scalar::axpy(0.37, a.data(), y_ref.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y[i], y_ref[i], 1e-15 * (1.0 + std::abs(y_ref[i])));
  }
}

INSTANTIATE_TEST_SUITE_P(AllIsas, KernelIsa, ::testing::Values(Isa::scalar, Isa::avx2),
                         [](const auto& info) { return std::string(isa_name(info.param)); });

TEST(KernelDispatch, ScalarAlwaysAvailable) {
  EXPECT_TRUE(isa_available(Isa::scalar));
  EXPECT_EQ(table_for(Isa::scalar).isa, Isa::scalar);
}

TEST(KernelDispatch, ForceIsaSwitchesActiveTable) {
  const Isa before = active().isa;
  force_isa(Isa::scalar);
  EXPECT_EQ(active().isa, Isa::scalar);
  if (isa_available(Isa::avx2)) {
    force_isa(Isa::avx2);
    EXPECT_EQ(active().isa, Isa::avx2);
  } else {
    EXPECT_THROW(force_isa(Isa::avx2), std::exception);
  }
  force_isa(before);
}

TEST(KernelDispatch, SpanWrappersUseActiveTable) {
  const std::vector<std::uint64_t> a{0b1010}, b{0b0110};
  EXPECT_EQ(hamming(a, b), 2u);
  const std::vector<double> x{1, 2, 3}, z{4, 5, 6};
  EXPECT_DOUBLE_EQ(dot(x, z), 32.0);
}

}  // namespace
