#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "proxyhash/code_classifier.hpp"
#include "proxyhash/proxy_set.hpp"
#include "proxyhash/synth.hpp"
#include "proxyhash/trainer.hpp"

namespace proxyhash {

/// Experiments train with the proxy loss alone unless lambda is set; the
/// transfer pipeline adds its own triplet variant.
inline TrainConfig proxy_only_training() {
  TrainConfig t;
  t.lambda = 0.0;
  return t;
}

/// Everything an ablation or transfer run depends on. One seed drives all
/// stochastic stages so that two runs with the same config are identical.
struct ExperimentConfig {
  int bits = 16;
  TrainConfig train = proxy_only_training();
  std::size_t top_n = 0;  // 0 = full ranking
  std::vector<std::size_t> precision_ks{1, 10, 50, 100, 500};
  std::vector<ProxyKind> kinds{ProxyKind::learned, ProxyKind::random, ProxyKind::tammes, ProxyKind::aligned,
                               ProxyKind::hclm,    ProxyKind::shclm,  ProxyKind::random_binary};
  // Train real-valued proxy sets at logit scale sqrt(d / K) so every variant
  // sees logits of the same magnitude as the +-1 sets.
  bool equalize_proxy_norms = true;
  int tammes_restarts = 8;
  int itq_restarts = 8;
  int greedy_restarts = 16;
  int folds = 4;                  // transfer: class-disjoint folds
  double transfer_lambda = 1.0;   // lambda of the "+triplet" transfer variant
  ClassifierConfig classifier;
  SynthConfig synth;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Parsed key=value pairs; '#' starts a comment, blank lines are skipped.
using ConfigValues = std::map<std::string, std::string>;

ConfigValues parse_config_text(const std::string& text);
ConfigValues load_config_file(const std::filesystem::path& path);

/// Applies known keys onto `cfg`; unknown keys and malformed values throw.
void apply_config(const ConfigValues& values, ExperimentConfig& cfg);

/// Flat key=value view of `cfg`, the same keys apply_config accepts.
ConfigValues describe(const ExperimentConfig& cfg);

}  // namespace proxyhash
