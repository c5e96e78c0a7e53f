#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "proxyhash/common.hpp"
#include "proxyhash/dataset.hpp"
#include "proxyhash/hashing_layer.hpp"

namespace proxyhash {

/// n codes of d bits, packed into ceil(d/64) little-endian u64 words each.
/// Bit j of code i is (word[i][j/64] >> (j % 64)) & 1; padding bits are zero.
class BinaryCodes {
 public:
  BinaryCodes() = default;
  BinaryCodes(std::size_t count, int bits);
  BinaryCodes(std::size_t count, int bits, std::vector<std::uint64_t> words);

  static std::size_t words_for(int bits) noexcept { return (static_cast<std::size_t>(bits) + 63) / 64; }

  /// bit j set iff column(j) >= 0 (sgn(0) = +1), one code per column.
  static BinaryCodes from_embeddings(const MatrixXd& embeddings);

  std::size_t size() const noexcept { return count_; }
  int bits() const noexcept { return bits_; }
  std::size_t words_per_code() const noexcept { return words_per_code_; }
  const std::vector<std::uint64_t>& words() const noexcept { return words_; }

  std::span<const std::uint64_t> code(std::size_t i) const {
    return {words_.data() + i * words_per_code_, words_per_code_};
  }
  bool bit(std::size_t i, int j) const {
    return (words_[i * words_per_code_ + static_cast<std::size_t>(j) / 64] >> (j % 64)) & 1U;
  }
  void set_bit(std::size_t i, int j, bool value);

  /// d x n matrix of +-1 (bit set -> +1).
  MatrixXd to_signs() const;

  bool operator==(const BinaryCodes&) const = default;

 private:
  std::size_t count_ = 0;
  int bits_ = 0;
  std::size_t words_per_code_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Codes plus the relevance payload used to judge matches.
struct BinaryCodeDatabase {
  BinaryCodes codes;
  std::optional<std::vector<int>> labels;
  std::optional<TagMatrix> tags;

  bool relevant_to(const BinaryCodeDatabase& queries, std::size_t query, std::size_t item) const;
};

BinaryCodes encode(const HashingLayer& layer, const FeatureMatrix& features);

/// Popcount of XOR over packed words; throws on length mismatch.
std::uint32_t hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

// "PHSH" code file.
std::vector<std::uint8_t> serialize(const BinaryCodes& codes);
BinaryCodes deserialize_codes(const std::vector<std::uint8_t>& bytes);
void save_codes(const BinaryCodes& codes, const std::filesystem::path& path);
BinaryCodes load_codes(const std::filesystem::path& path);

}  // namespace proxyhash
