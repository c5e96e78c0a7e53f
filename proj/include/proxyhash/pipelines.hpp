#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "proxyhash/binary_alignment.hpp"
#include "proxyhash/config.hpp"
#include "proxyhash/dataset.hpp"
#include "proxyhash/report.hpp"
#include "proxyhash/semantic_assignment.hpp"

namespace proxyhash {

/// Builds every proxy variant for one training set. The Tammes solution, its
/// alignment, and its binarization are computed once and shared, so the
/// variants differ only in the step that names them.
class ProxyFactory {
 public:
  ProxyFactory(const FeatureDataset& train, const ExperimentConfig& cfg, Warnings* warnings = nullptr);

  ProxySet make(ProxyKind kind);

  const ProxySet& tammes();
  const RotationMatrix& alignment();
  const ProxySet& binarized();  // HCLM before any class permutation
  const SimilarityMatrix& similarity();

 private:
  const FeatureDataset& train_;
  const ExperimentConfig& cfg_;
  Warnings* warnings_;
  int classes_;
  std::optional<ProxySet> tammes_;
  std::optional<RotationMatrix> rotation_;
  std::optional<ProxySet> binarized_;
  std::optional<SimilarityMatrix> similarity_;
};

/// Encodes both splits with `layer` and scores retrieval of `query` against
/// `database`. With single labels and a separate query split, also fits the
/// code classifier on the database and reports its query accuracy.
RetrievalReport score_layer(const std::string& name, const HashingLayer& layer, const FeatureDataset& database,
                            const FeatureDataset& query, const ExperimentConfig& cfg);

/// Trains the layer on `train`, then scores it with `train` as the database. An empty
/// query split falls back to leave-one-out queries over the database.
RetrievalReport evaluate_variant(const std::string& name, const FeatureDataset& train, const FeatureDataset& query,
                                 const ProxySet& proxies, const TrainConfig& train_cfg, const ExperimentConfig& cfg,
                                 Warnings* warnings = nullptr);

/// One trained variant per cfg.kinds, all with the same training seed and data order.
ExperimentReport run_ablation(const FeatureDataset& train, const FeatureDataset& query, const ExperimentConfig& cfg);

/// Class folds for the transfer protocol: a seeded shuffle of [0, classes)
/// cut into `folds` near-equal contiguous groups.
std::vector<std::vector<int>> class_folds(int classes, int folds, std::uint64_t seed);

/// Leave-one-fold-out over class-disjoint folds. Variants: hclm, shclm, and
/// shclm+triplet. Each summary run averages the folds; per-fold runs follow.
ExperimentReport run_transfer(const FeatureDataset& train, const FeatureDataset& query, const ExperimentConfig& cfg);

}  // namespace proxyhash
