#include "proxyhash/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "proxyhash/binary_io.hpp"

namespace proxyhash {

namespace {

constexpr std::uint32_t kFeatureFileVersion = 1;

std::runtime_error line_error(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  return std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

MatrixXd FeatureMatrix::to_columns() const {
  MatrixXd out(static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = values[i * cols + j];
  return out;
}

bool share_tag(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k] != 0 && b[k] != 0) return true;
  return false;
}

int FeatureDataset::num_classes() const {
  if (tags) return static_cast<int>(tags->cols);
  if (labels && !labels->empty()) return *std::max_element(labels->begin(), labels->end()) + 1;
  return 0;
}

void FeatureDataset::validate() const {
  if (features.rows < 1) throw std::invalid_argument("dataset must contain at least one sample");
  if (features.cols < 1) throw std::invalid_argument("feature dimension must be at least 1");
  if (features.values.size() != features.rows * features.cols) throw std::invalid_argument("feature storage size mismatch");
  if (labels.has_value() == tags.has_value()) {
    throw std::invalid_argument("dataset needs exactly one of labels or tags");
  }
  if (labels) {
    if (labels->size() != features.rows) {
      throw std::invalid_argument("label count " + std::to_string(labels->size()) + " does not match " +
                                  std::to_string(features.rows) + " feature rows");
    }
    for (std::size_t i = 0; i < labels->size(); ++i)
      if ((*labels)[i] < 0) throw std::invalid_argument("negative label at row " + std::to_string(i));
  }
  if (tags) {
    if (tags->rows != features.rows) {
      throw std::invalid_argument("tag rows " + std::to_string(tags->rows) + " do not match " +
                                  std::to_string(features.rows) + " feature rows");
    }
    if (tags->cols < 1) throw std::invalid_argument("tag matrix has no columns");
  }
}

FeatureDataset FeatureDataset::subset(std::span<const std::size_t> indices) const {
  FeatureDataset out;
  out.features = FeatureMatrix(indices.size(), features.cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = features.row(indices[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
  }
  if (labels) {
    out.labels.emplace();
    out.labels->reserve(indices.size());
    for (std::size_t idx : indices) out.labels->push_back((*labels)[idx]);
  }
  if (tags) {
    out.tags.emplace(indices.size(), tags->cols);
    for (std::size_t i = 0; i < indices.size(); ++i)
      for (std::size_t k = 0; k < tags->cols; ++k) (*out.tags)(i, k) = (*tags)(indices[i], k);
  }
  return out;
}

std::vector<std::uint8_t> serialize(const FeatureMatrix& features) {
  ByteWriter w;
  w.magic("PFTR");
  w.u32(kFeatureFileVersion);
  w.u64(features.rows);
  w.u32(static_cast<std::uint32_t>(features.cols));
  for (float v : features.values) w.f32(v);
  return w.buffer();
}

FeatureMatrix deserialize_features(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  r.expect_magic("PFTR");
  const std::size_t version_at = r.position();
  if (r.u32() != kFeatureFileVersion) throw FormatError("unsupported feature file version", version_at);
  const std::uint64_t n = r.u64();
  const std::uint32_t d = r.u32();
  if (d == 0) throw FormatError("feature dimension is zero", r.position() - 4);
  if (n > r.remaining() / 4 / d || r.remaining() < n * d * 4) {
    throw FormatError("truncated feature payload: expected " + std::to_string(n * d * 4) + " bytes, found " +
                          std::to_string(r.remaining()),
                      r.position());
  }
  FeatureMatrix m(n, d);
  for (auto& v : m.values) v = r.f32();
  r.expect_end();
  return m;
}

void save_features(const FeatureMatrix& features, const std::filesystem::path& path) {
  write_file_atomic(path, serialize(features));
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  try {
    return deserialize_features(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

FeatureMatrix load_features_csv(const std::filesystem::path& path) {
  auto in = open_text(path);
  FeatureMatrix m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    std::size_t count = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell = trim(cell);
      float v = 0.0f;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) throw line_error(path, lineno, "bad number '" + cell + "'");
      m.values.push_back(v);
      ++count;
    }
    if (m.rows == 0) m.cols = count;
    if (count != m.cols) {
      throw line_error(path, lineno, "expected " + std::to_string(m.cols) + " columns, found " + std::to_string(count));
    }
    ++m.rows;
  }
  return m;
}

void save_features_csv(const FeatureMatrix& features, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(9);
  for (std::size_t i = 0; i < features.rows; ++i) {
    const auto row = features.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

void save_labels(std::span<const int> labels, const std::filesystem::path& path) {
  std::ostringstream out;
  for (int y : labels) out << (y + 1) << '\n';
  write_text_atomic(path, out.str());
}

std::vector<int> load_labels(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    int v = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc() || ptr != line.data() + line.size()) throw line_error(path, lineno, "bad label '" + line + "'");
    if (v < 1) throw line_error(path, lineno, "label " + std::to_string(v) + " out of range (labels are 1-based)");
    labels.push_back(v - 1);
  }
  return labels;
}

void save_tags(const TagMatrix& tags, const std::filesystem::path& path) {
  std::ostringstream out;
  for (std::size_t i = 0; i < tags.rows; ++i) {
    for (std::size_t k = 0; k < tags.cols; ++k) out << (k ? " " : "") << int(tags(i, k));
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

TagMatrix load_tags(const std::filesystem::path& path) {
  auto in = open_text(path);
  TagMatrix tags;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::size_t count = 0;
    bool any = false;
    while (ss >> tok) {
      if (tok != "0" && tok != "1") throw line_error(path, lineno, "tag entries must be 0 or 1, got '" + tok + "'");
      tags.bits.push_back(tok == "1" ? 1 : 0);
      any = any || tok == "1";
      ++count;
    }
    if (tags.rows == 0) tags.cols = count;
    if (count != tags.cols) {
      throw line_error(path, lineno, "expected " + std::to_string(tags.cols) + " tags, found " + std::to_string(count));
    }
    if (!any) throw line_error(path, lineno, "sample has no tags");
    ++tags.rows;
  }
  return tags;
}

FeatureDataset ingest(const std::filesystem::path& features, const std::optional<std::filesystem::path>& labels,
                      const std::optional<std::filesystem::path>& tags, const IngestOptions& options) {
  if (labels.has_value() == tags.has_value()) throw std::invalid_argument("ingest: pass exactly one of labels or tags");
  FeatureDataset ds;
  ds.features = features.extension() == ".csv" ? load_features_csv(features) : load_features(features);
  if (labels) {
    ds.labels = load_labels(*labels);
    if (options.classes) {
      for (std::size_t i = 0; i < ds.labels->size(); ++i) {
        if ((*ds.labels)[i] >= *options.classes) {
          throw line_error(*labels, i + 1, "label " + std::to_string((*ds.labels)[i] + 1) + " exceeds class count " +
                                               std::to_string(*options.classes));
        }
      }
    }
  } else {
    ds.tags = load_tags(*tags);
  }
  ds.validate();
  return ds;
}

}  // namespace proxyhash
