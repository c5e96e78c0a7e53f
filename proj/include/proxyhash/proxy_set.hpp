#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "proxyhash/common.hpp"

namespace proxyhash {

// On-disk codes for the u8 "kind" field of a proxy file; do not renumber.
enum class ProxyKind : std::uint8_t {
  tammes = 0,
  aligned = 1,
  hclm = 2,
  shclm = 3,
  random = 4,
  random_binary = 5,
  learned = 6,
};

bool is_binary(ProxyKind kind) noexcept;
std::string_view to_string(ProxyKind kind) noexcept;
ProxyKind parse_proxy_kind(std::string_view name);

/// A fixed set of C class proxies of dimension d, stored as the columns of a
/// d x C matrix. Every column shares the squared norm K (1 for real kinds,
/// d for +-1 kinds). Column y is the proxy of class y.
class ProxySet {
 public:
  static constexpr double kNormTolerance = 1e-9;

  /// Validates shape, entries, and the shared-norm invariant.
  ProxySet(MatrixXd weights, ProxyKind kind);

  /// Proxies released for training (the "learned" baseline). Norms are free;
  /// K is reported as the mean squared column norm.
  static ProxySet learned(MatrixXd weights);

  const MatrixXd& weights() const noexcept { return weights_; }
  int classes() const noexcept { return static_cast<int>(weights_.cols()); }
  int bits() const noexcept { return static_cast<int>(weights_.rows()); }
  ProxyKind kind() const noexcept { return kind_; }
  double norm_constant() const noexcept { return norm_constant_; }

  /// Column y of the result is column assignment[y] of this set.
  ProxySet permuted(std::span<const int> assignment, ProxyKind kind) const;

  bool operator==(const ProxySet& other) const;

 private:
  ProxySet(MatrixXd weights, ProxyKind kind, double norm_constant);

  MatrixXd weights_;
  ProxyKind kind_;
  double norm_constant_;
};

// "PHPX" proxy file.
std::vector<std::uint8_t> serialize(const ProxySet& proxies);
ProxySet deserialize_proxies(class ByteReader& reader);
void save_proxies(const ProxySet& proxies, const std::filesystem::path& path);
ProxySet load_proxies(const std::filesystem::path& path);

}  // namespace proxyhash
