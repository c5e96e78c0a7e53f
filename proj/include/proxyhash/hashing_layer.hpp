#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "proxyhash/common.hpp"
#include "proxyhash/proxy_set.hpp"

namespace proxyhash {

/// nu(x) = tanh(L^T q(x) + b), followed by a softmax layer whose weights are
/// the (fixed) proxy set.
class HashingLayer {
 public:
  HashingLayer(MatrixXd projection, VectorXd bias, ProxySet proxies);

  /// L ~ N(0, 1/D) entrywise, b = 0.
  static HashingLayer initialize(int input_dim, ProxySet proxies, std::uint64_t seed);

  int input_dim() const noexcept { return static_cast<int>(projection_.rows()); }
  int bits() const noexcept { return static_cast<int>(projection_.cols()); }

  const MatrixXd& projection() const noexcept { return projection_; }  // D x d
  const VectorXd& bias() const noexcept { return bias_; }
  const ProxySet& proxies() const noexcept { return proxies_; }

  MatrixXd& mutable_projection() noexcept { return projection_; }
  VectorXd& mutable_bias() noexcept { return bias_; }
  void replace_proxies(ProxySet proxies);

  /// Writes the d-dimensional embedding of `input` into `out`.
  void forward(std::span<const double> input, std::span<double> out) const;
  VectorXd forward(const VectorXd& input) const;
  /// One embedding per column of `inputs` (D x n) -> d x n.
  MatrixXd forward_batch(const MatrixXd& inputs) const;

 private:
  MatrixXd projection_;
  VectorXd bias_;
  ProxySet proxies_;
};

// "PHLY" layer file; embeds the proxy file after the parameters.
std::vector<std::uint8_t> serialize(const HashingLayer& layer);
HashingLayer deserialize_layer(const std::vector<std::uint8_t>& bytes);
void save_layer(const HashingLayer& layer, const std::filesystem::path& path);
HashingLayer load_layer(const std::filesystem::path& path);

}  // namespace proxyhash
