#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proxyhash/retrieval.hpp"

namespace proxyhash {

inline constexpr int kReportSchemaVersion = 1;

/// Retrieval quality and proxy diagnostics for one trained variant.
struct RetrievalReport {
  std::string name;
  double map = 0.0;
  std::size_t queries = 0;
  std::size_t queries_without_relevant = 0;
  std::vector<double> per_query_ap;
  std::vector<std::size_t> ks;
  std::vector<double> precision;     // precision@ks[i]
  std::vector<double> margins;       // per class
  double mean_binarization_error = 0.0;
  Histogram weight_histogram;        // proxy entries scaled to +-1
  Histogram binarization_histogram;  // |nu_j - sgn(nu_j)|
  int duplicate_proxies = 0;
  std::optional<double> classifier_accuracy;
  std::vector<double> loss_curve;

  bool operator==(const RetrievalReport&) const = default;
};

struct ExperimentReport {
  std::string experiment;  // "ablation", "transfer", "retrieve"
  std::map<std::string, std::string> config;
  std::vector<RetrievalReport> runs;
  std::vector<std::string> warnings;

  const RetrievalReport& run(const std::string& name) const;

  bool operator==(const ExperimentReport&) const = default;
};

std::string to_json_text(const ExperimentReport& report);
ExperimentReport parse_report(const std::string& json_text);

/// Writes `path` (JSON) plus, next to it, <stem>_histograms.csv and
/// <stem>_precision.csv. Fails before writing anything if any run has no
/// queries.
void emit_report(const ExperimentReport& report, const std::filesystem::path& path);
ExperimentReport read_report(const std::filesystem::path& path);

}  // namespace proxyhash
