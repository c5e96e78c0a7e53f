#include "proxyhash/hashing_layer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "proxyhash/binary_io.hpp"
#include "proxyhash/kernels/kernels.hpp"

namespace proxyhash {

namespace {
constexpr std::uint32_t kLayerFileVersion = 1;
}

HashingLayer::HashingLayer(MatrixXd projection, VectorXd bias, ProxySet proxies)
    : projection_(std::move(projection)), bias_(std::move(bias)), proxies_(std::move(proxies)) {
  if (projection_.rows() < 1 || projection_.cols() < 1) throw std::invalid_argument("projection must be non-empty");
  if (bias_.size() != projection_.cols()) throw std::invalid_argument("bias length must equal code length");
  if (proxies_.bits() != projection_.cols()) {
    throw std::invalid_argument("proxy dimension " + std::to_string(proxies_.bits()) + " does not match code length " +
                                std::to_string(projection_.cols()));
  }
}

HashingLayer HashingLayer::initialize(int input_dim, ProxySet proxies, std::uint64_t seed) {
  if (input_dim < 1) throw std::invalid_argument("input dimension must be at least 1");
  auto rng = make_rng(seed, 0x4c415952);
  MatrixXd l = gaussian_matrix(input_dim, proxies.bits(), rng) / std::sqrt(static_cast<double>(input_dim));
  VectorXd b = VectorXd::Zero(proxies.bits());
  return HashingLayer(std::move(l), std::move(b), std::move(proxies));
}

void HashingLayer::replace_proxies(ProxySet proxies) {
  if (proxies.bits() != bits()) throw std::invalid_argument("replacement proxies have the wrong dimension");
  proxies_ = std::move(proxies);
}

void HashingLayer::forward(std::span<const double> input, std::span<double> out) const {
  if (input.size() != static_cast<std::size_t>(input_dim())) {
    throw std::invalid_argument("forward: input has dimension " + std::to_string(input.size()) + ", expected " +
                                std::to_string(input_dim()));
  }
  if (out.size() != static_cast<std::size_t>(bits())) throw std::invalid_argument("forward: output size mismatch");
  const auto& k = kernels::active();
  const auto rows = static_cast<std::size_t>(projection_.rows());
  for (Eigen::Index j = 0; j < projection_.cols(); ++j) {
    // Column j of the column-major projection is contiguous.
    out[static_cast<std::size_t>(j)] = std::tanh(k.dot(projection_.col(j).data(), input.data(), rows) + bias_(j));
  }
}

VectorXd HashingLayer::forward(const VectorXd& input) const {
  VectorXd out(bits());
  forward(std::span<const double>(input.data(), static_cast<std::size_t>(input.size())),
          std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

MatrixXd HashingLayer::forward_batch(const MatrixXd& inputs) const {
  MatrixXd out(bits(), inputs.cols());
  for (Eigen::Index i = 0; i < inputs.cols(); ++i) {
    forward(std::span<const double>(inputs.col(i).data(), static_cast<std::size_t>(inputs.rows())),
            std::span<double>(out.col(i).data(), static_cast<std::size_t>(out.rows())));
  }
  return out;
}

std::vector<std::uint8_t> serialize(const HashingLayer& layer) {
  ByteWriter w;
  w.magic("PHLY");
  w.u32(kLayerFileVersion);
  w.u32(static_cast<std::uint32_t>(layer.input_dim()));
  w.u32(static_cast<std::uint32_t>(layer.bits()));
  const MatrixXd& l = layer.projection();
  for (Eigen::Index r = 0; r < l.rows(); ++r)
    for (Eigen::Index c = 0; c < l.cols(); ++c) w.f64(l(r, c));
  for (Eigen::Index j = 0; j < layer.bias().size(); ++j) w.f64(layer.bias()(j));
  w.bytes(serialize(layer.proxies()));
  return w.buffer();
}

HashingLayer deserialize_layer(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  r.expect_magic("PHLY");
  const std::size_t version_at = r.position();
  if (r.u32() != kLayerFileVersion) throw FormatError("unsupported layer file version", version_at);
  const std::uint32_t in_dim = r.u32();
  const std::uint32_t bits = r.u32();
  if (r.remaining() < (static_cast<std::size_t>(in_dim) * bits + bits) * 8) {
    throw FormatError("truncated layer parameters", r.position());
  }
  MatrixXd l(in_dim, bits);
  for (std::uint32_t i = 0; i < in_dim; ++i)
    for (std::uint32_t j = 0; j < bits; ++j) l(i, j) = r.f64();
  VectorXd b(bits);
  for (std::uint32_t j = 0; j < bits; ++j) b(j) = r.f64();
  ProxySet proxies = deserialize_proxies(r);
  r.expect_end();
  return HashingLayer(std::move(l), std::move(b), std::move(proxies));
}

void save_layer(const HashingLayer& layer, const std::filesystem::path& path) {
  write_file_atomic(path, serialize(layer));
}

HashingLayer load_layer(const std::filesystem::path& path) { return deserialize_layer(read_file_bytes(path)); }

}  // namespace proxyhash
