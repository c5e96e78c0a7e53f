#include "proxyhash/binary_codes.hpp"

#include <stdexcept>
#include <string>

#include "proxyhash/binary_io.hpp"
#include "proxyhash/kernels/kernels.hpp"

namespace proxyhash {

namespace {
constexpr std::uint32_t kCodeFileVersion = 1;

std::uint64_t padding_mask(int bits) {
  const int used = bits % 64;
  return used == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << used) - 1;
}
}  // namespace

BinaryCodes::BinaryCodes(std::size_t count, int bits)
    : count_(count), bits_(bits), words_per_code_(words_for(bits)), words_(count * words_for(bits), 0) {
  if (bits < 1) throw std::invalid_argument("code length must be at least 1 bit");
}

BinaryCodes::BinaryCodes(std::size_t count, int bits, std::vector<std::uint64_t> words)
    : count_(count), bits_(bits), words_per_code_(words_for(bits)), words_(std::move(words)) {
  if (bits < 1) throw std::invalid_argument("code length must be at least 1 bit");
  if (words_.size() != count_ * words_per_code_) throw std::invalid_argument("packed word count mismatch");
  const std::uint64_t mask = padding_mask(bits);
  for (std::size_t i = 0; i < count_; ++i) {
    if (words_[i * words_per_code_ + words_per_code_ - 1] & ~mask) {
      throw std::invalid_argument("code " + std::to_string(i) + " has non-zero padding bits");
    }
  }
}

void BinaryCodes::set_bit(std::size_t i, int j, bool value) {
  auto& word = words_[i * words_per_code_ + static_cast<std::size_t>(j) / 64];
  const std::uint64_t m = std::uint64_t{1} << (j % 64);
  word = value ? (word | m) : (word & ~m);
}

BinaryCodes BinaryCodes::from_embeddings(const MatrixXd& embeddings) {
  BinaryCodes codes(static_cast<std::size_t>(embeddings.cols()), static_cast<int>(embeddings.rows()));
  for (Eigen::Index i = 0; i < embeddings.cols(); ++i)
    for (Eigen::Index j = 0; j < embeddings.rows(); ++j)
      if (embeddings(j, i) >= 0.0) codes.set_bit(static_cast<std::size_t>(i), static_cast<int>(j), true);
  return codes;
}

MatrixXd BinaryCodes::to_signs() const {
  MatrixXd out(bits_, static_cast<Eigen::Index>(count_));
  for (std::size_t i = 0; i < count_; ++i)
    for (int j = 0; j < bits_; ++j) out(j, static_cast<Eigen::Index>(i)) = bit(i, j) ? 1.0 : -1.0;
  return out;
}

bool BinaryCodeDatabase::relevant_to(const BinaryCodeDatabase& queries, std::size_t query, std::size_t item) const {
  if (labels && queries.labels) return (*queries.labels)[query] == (*labels)[item];
  if (tags && queries.tags) return share_tag(queries.tags->row(query), tags->row(item));
  throw std::invalid_argument("query and database relevance payloads differ in kind");
}

BinaryCodes encode(const HashingLayer& layer, const FeatureMatrix& features) {
  if (features.cols != static_cast<std::size_t>(layer.input_dim())) {
    throw std::invalid_argument("encode: features have dimension " + std::to_string(features.cols) +
                                ", layer expects " + std::to_string(layer.input_dim()));
  }
  BinaryCodes codes(features.rows, layer.bits());
  std::vector<double> input(features.cols);
  std::vector<double> nu(static_cast<std::size_t>(layer.bits()));
  for (std::size_t i = 0; i < features.rows; ++i) {
    const auto row = features.row(i);
    std::copy(row.begin(), row.end(), input.begin());
    layer.forward(input, nu);
    for (int j = 0; j < layer.bits(); ++j)
      if (nu[static_cast<std::size_t>(j)] >= 0.0) codes.set_bit(i, j, true);
  }
  return codes;
}

std::uint32_t hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming: code length mismatch");
  return kernels::hamming(a, b);
}

std::vector<std::uint8_t> serialize(const BinaryCodes& codes) {
  ByteWriter w;
  w.magic("PHSH");
  w.u32(kCodeFileVersion);
  w.u64(codes.size());
  w.u32(static_cast<std::uint32_t>(codes.bits()));
  for (std::uint64_t word : codes.words()) w.u64(word);
  return w.buffer();
}

BinaryCodes deserialize_codes(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  r.expect_magic("PHSH");
  const std::size_t version_at = r.position();
  if (r.u32() != kCodeFileVersion) throw FormatError("unsupported code file version", version_at);
  const std::uint64_t n = r.u64();
  const std::uint32_t d = r.u32();
  if (d == 0) throw FormatError("code length is zero", r.position() - 4);
  const std::size_t wpc = BinaryCodes::words_for(static_cast<int>(d));
  if (n > r.remaining() / 8 / wpc) throw FormatError("truncated code payload", r.position());
  std::vector<std::uint64_t> words(n * wpc);
  for (auto& word : words) word = r.u64();
  r.expect_end();
  try {
    return BinaryCodes(n, static_cast<int>(d), std::move(words));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what(), 20);
  }
}

void save_codes(const BinaryCodes& codes, const std::filesystem::path& path) {
  write_file_atomic(path, serialize(codes));
}

BinaryCodes load_codes(const std::filesystem::path& path) { return deserialize_codes(read_file_bytes(path)); }

}  // namespace proxyhash
