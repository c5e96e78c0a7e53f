#include "proxyhash/proxy_set.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "proxyhash/binary_io.hpp"

namespace proxyhash {

namespace {

constexpr std::uint32_t kProxyFileVersion = 1;

constexpr ProxyKind kAllKinds[] = {ProxyKind::tammes, ProxyKind::aligned,       ProxyKind::hclm,
                                   ProxyKind::shclm,  ProxyKind::random,        ProxyKind::random_binary,
                                   ProxyKind::learned};

}  // namespace

bool is_binary(ProxyKind kind) noexcept {
  return kind == ProxyKind::hclm || kind == ProxyKind::shclm || kind == ProxyKind::random_binary;
}

std::string_view to_string(ProxyKind kind) noexcept {
  switch (kind) {
    case ProxyKind::tammes: return "tammes";
    case ProxyKind::aligned: return "aligned";
    case ProxyKind::hclm: return "hclm";
    case ProxyKind::shclm: return "shclm";
    case ProxyKind::random: return "random";
    case ProxyKind::random_binary: return "random_binary";
    case ProxyKind::learned: return "learned";
  }
  return "unknown";
}

ProxyKind parse_proxy_kind(std::string_view name) {
  for (ProxyKind k : kAllKinds) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown proxy kind: " + std::string(name));
}

ProxySet::ProxySet(MatrixXd weights, ProxyKind kind, double norm_constant)
    : weights_(std::move(weights)), kind_(kind), norm_constant_(norm_constant) {}

ProxySet::ProxySet(MatrixXd weights, ProxyKind kind) : weights_(std::move(weights)), kind_(kind) {
  if (kind == ProxyKind::learned) {
    *this = learned(std::move(weights_));
    return;
  }
  if (weights_.cols() < 2) throw std::invalid_argument("proxy set needs at least 2 classes");
  if (weights_.rows() < 1) throw std::invalid_argument("proxy dimension must be at least 1");
  if (!weights_.allFinite()) throw std::invalid_argument("proxy weights must be finite");

  const auto d = weights_.rows();
  if (is_binary(kind)) {
    for (Eigen::Index c = 0; c < weights_.cols(); ++c)
      for (Eigen::Index r = 0; r < d; ++r)
        if (weights_(r, c) != 1.0 && weights_(r, c) != -1.0)
          throw std::invalid_argument("binary proxy entries must be exactly +-1 (column " +
                                      std::to_string(c) + ")");
    norm_constant_ = static_cast<double>(d);
  } else {
    norm_constant_ = 1.0;
  }
  for (Eigen::Index c = 0; c < weights_.cols(); ++c) {
    const double sq = weights_.col(c).squaredNorm();
    if (std::abs(sq - norm_constant_) >= kNormTolerance) {
      throw std::invalid_argument("proxy column " + std::to_string(c) + " has squared norm " +
                                  std::to_string(sq) + ", expected " + std::to_string(norm_constant_));
    }
  }
}

ProxySet ProxySet::learned(MatrixXd weights) {
  if (weights.cols() < 2) throw std::invalid_argument("proxy set needs at least 2 classes");
  if (weights.rows() < 1) throw std::invalid_argument("proxy dimension must be at least 1");
  if (!weights.allFinite()) throw std::invalid_argument("proxy weights must be finite");
  const double k = weights.colwise().squaredNorm().mean();
  return ProxySet(std::move(weights), ProxyKind::learned, k);
}

ProxySet ProxySet::permuted(std::span<const int> assignment, ProxyKind kind) const {
  if (assignment.size() != static_cast<std::size_t>(classes())) {
    throw std::invalid_argument("assignment size does not match proxy count");
  }
  std::vector<bool> seen(assignment.size(), false);
  MatrixXd out(weights_.rows(), weights_.cols());
  for (std::size_t y = 0; y < assignment.size(); ++y) {
    const int col = assignment[y];
    if (col < 0 || col >= classes() || seen[static_cast<std::size_t>(col)]) {
      throw std::invalid_argument("assignment is not a permutation");
    }
    seen[static_cast<std::size_t>(col)] = true;
    out.col(static_cast<Eigen::Index>(y)) = weights_.col(col);
  }
  return ProxySet(std::move(out), kind);
}

bool ProxySet::operator==(const ProxySet& other) const {
  return kind_ == other.kind_ && norm_constant_ == other.norm_constant_ &&
         weights_.rows() == other.weights_.rows() && weights_.cols() == other.weights_.cols() &&
         weights_ == other.weights_;
}

std::vector<std::uint8_t> serialize(const ProxySet& proxies) {
  ByteWriter w;
  w.magic("PHPX");
  w.u32(kProxyFileVersion);
  w.u32(static_cast<std::uint32_t>(proxies.classes()));
  w.u32(static_cast<std::uint32_t>(proxies.bits()));
  w.u8(static_cast<std::uint8_t>(proxies.kind()));
  w.f64(proxies.norm_constant());
  const MatrixXd& m = proxies.weights();
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) w.f64(m(r, c));
  return w.buffer();
}

ProxySet deserialize_proxies(ByteReader& reader) {
  reader.expect_magic("PHPX");
  const std::size_t version_at = reader.position();
  if (reader.u32() != kProxyFileVersion) throw FormatError("unsupported proxy file version", version_at);
  const std::uint32_t classes = reader.u32();
  const std::uint32_t bits = reader.u32();
  const std::size_t kind_at = reader.position();
  const std::uint8_t kind_raw = reader.u8();
  if (kind_raw > static_cast<std::uint8_t>(ProxyKind::learned)) throw FormatError("unknown proxy kind", kind_at);
  const double stored_k = reader.f64();
  if (reader.remaining() < static_cast<std::size_t>(classes) * bits * 8) {
    throw FormatError("truncated proxy matrix", reader.position());
  }
  MatrixXd m(bits, classes);
  for (std::uint32_t c = 0; c < classes; ++c)
    for (std::uint32_t r = 0; r < bits; ++r) m(r, c) = reader.f64();
  const auto kind = static_cast<ProxyKind>(kind_raw);
  ProxySet set = kind == ProxyKind::learned ? ProxySet::learned(std::move(m)) : ProxySet(std::move(m), kind);
  if (set.norm_constant() != stored_k && kind != ProxyKind::learned) {
    throw FormatError("stored norm constant disagrees with proxy kind", kind_at + 1);
  }
  return set;
}

void save_proxies(const ProxySet& proxies, const std::filesystem::path& path) {
  write_file_atomic(path, serialize(proxies));
}

ProxySet load_proxies(const std::filesystem::path& path) {
  ByteReader reader(read_file_bytes(path));
  ProxySet set = deserialize_proxies(reader);
  reader.expect_end();
  return set;
}

}  // namespace proxyhash
