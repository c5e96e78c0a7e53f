#pragma once

#include <cstdint>
#include <vector>

#include "proxyhash/dataset.hpp"

namespace proxyhash {

/// Hierarchical Gaussian classes: class mean = superclass center + class
/// offset, sample = class mean + isotropic noise. Scales are expected norms
/// in the D-dimensional feature space (per-coordinate std = scale / sqrt(D)).
struct SynthConfig {
  int superclasses = 8;
  int classes_per_superclass = 4;
  int samples_per_class = 200;  // training / database split
  int queries_per_class = 20;   // held-out query split
  int dim = 64;
  double noise = 2.0;
  double separation = 4.0;      // superclass centers
  double class_spread = 1.5;    // class offsets around their superclass
  bool multi_label = false;
  double extra_tag_probability = 0.3;  // multi-label: chance of also carrying a sibling tag
  std::uint64_t seed = 0;

  int classes() const noexcept { return superclasses * classes_per_superclass; }
  void validate() const;
};

struct SynthData {
  FeatureDataset train;
  FeatureDataset query;
  std::vector<int> superclass_of;  // per class
  MatrixXd class_means;            // D x C generator ground truth
};

/// Deterministic per seed. Samples are grouped by class within each split.
SynthData synth_generate(const SynthConfig& cfg);

}  // namespace proxyhash
