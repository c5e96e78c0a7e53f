#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "proxyhash/common.hpp"

namespace proxyhash {

/// Row-major n x D single-precision features, as stored on disk.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n, std::size_t d) : rows(n), cols(d), values(n * d, 0.0f) {}

  std::span<const float> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<float> row(std::size_t i) { return {values.data() + i * cols, cols}; }

  /// D x n double matrix, one sample per column.
  MatrixXd to_columns() const;

  bool operator==(const FeatureMatrix&) const = default;
};

/// n x T binary tag matrix.
struct TagMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bits;

  TagMatrix() = default;
  TagMatrix(std::size_t n, std::size_t t) : rows(n), cols(t), bits(n * t, 0) {}

  std::uint8_t operator()(std::size_t i, std::size_t k) const { return bits[i * cols + k]; }
  std::uint8_t& operator()(std::size_t i, std::size_t k) { return bits[i * cols + k]; }
  std::span<const std::uint8_t> row(std::size_t i) const { return {bits.data() + i * cols, cols}; }

  bool operator==(const TagMatrix&) const = default;
};

bool share_tag(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

/// Features plus exactly one of: single labels (0-based internally, 1-based
/// on disk) or multi-label tags.
struct FeatureDataset {
  FeatureMatrix features;
  std::optional<std::vector<int>> labels;
  std::optional<TagMatrix> tags;

  std::size_t size() const noexcept { return features.rows; }
  std::size_t dim() const noexcept { return features.cols; }
  bool multi_label() const noexcept { return tags.has_value(); }
  /// Number of classes (max label + 1) or number of tags.
  int num_classes() const;

  void validate() const;
  FeatureDataset subset(std::span<const std::size_t> indices) const;

  bool operator==(const FeatureDataset&) const = default;
};

// "PFTR" binary feature file.
std::vector<std::uint8_t> serialize(const FeatureMatrix& features);
FeatureMatrix deserialize_features(const std::vector<std::uint8_t>& bytes);
void save_features(const FeatureMatrix& features, const std::filesystem::path& path);
FeatureMatrix load_features(const std::filesystem::path& path);
/// One comma-separated row per line.
FeatureMatrix load_features_csv(const std::filesystem::path& path);
void save_features_csv(const FeatureMatrix& features, const std::filesystem::path& path);

void save_labels(std::span<const int> labels, const std::filesystem::path& path);
std::vector<int> load_labels(const std::filesystem::path& path);
void save_tags(const TagMatrix& tags, const std::filesystem::path& path);
TagMatrix load_tags(const std::filesystem::path& path);

struct IngestOptions {
  std::optional<int> classes;  // reject labels above this when set
};

/// Reads features (.pf binary, or .csv by extension) with a labels or tags
/// file and validates the combination.
FeatureDataset ingest(const std::filesystem::path& features, const std::optional<std::filesystem::path>& labels,
                      const std::optional<std::filesystem::path>& tags, const IngestOptions& options = {});

}  // namespace proxyhash
