#include "proxyhash/synth.hpp"

#include <cmath>
#include <stdexcept>

namespace proxyhash {

void SynthConfig::validate() const {
  if (superclasses < 1 || classes_per_superclass < 1) throw std::invalid_argument("synth: class counts must be >= 1");
  if (samples_per_class < 1 || queries_per_class < 0) throw std::invalid_argument("synth: samples_per_class must be >= 1");
  if (dim < 1) throw std::invalid_argument("synth: dim must be >= 1");
  if (!(noise > 0.0)) throw std::invalid_argument("synth: noise must be > 0");
  if (separation < 0.0 || class_spread < 0.0) throw std::invalid_argument("synth: scales must be >= 0");
  if (extra_tag_probability < 0.0 || extra_tag_probability > 1.0) {
    throw std::invalid_argument("synth: extra_tag_probability must be in [0, 1]");
  }
}

namespace {

struct SplitSpec {
  int per_class;
  std::uint64_t stream;
};

FeatureDataset make_split(const SynthConfig& cfg, const SynthData& g, const SplitSpec& spec) {
  const int c_total = cfg.classes();
  const auto n = static_cast<std::size_t>(c_total) * static_cast<std::size_t>(spec.per_class);
  const auto dim = static_cast<std::size_t>(cfg.dim);
  const double noise_sd = cfg.noise / std::sqrt(static_cast<double>(cfg.dim));

  auto rng = make_rng(cfg.seed, spec.stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  FeatureDataset out;
  out.features = FeatureMatrix(n, dim);
  std::vector<int> labels;
  TagMatrix tags;
  if (cfg.multi_label) tags = TagMatrix(n, static_cast<std::size_t>(c_total));
  else labels.reserve(n);

  std::size_t row = 0;
  for (int c = 0; c < c_total; ++c) {
    for (int s = 0; s < spec.per_class; ++s, ++row) {
      VectorXd mean = g.class_means.col(c);
      if (cfg.multi_label) {
        tags(row, static_cast<std::size_t>(c)) = 1;
        if (cfg.classes_per_superclass > 1 && unit(rng) < cfg.extra_tag_probability) {
          // One sibling from the same superclass; the feature mixes both means.
          const int base = g.superclass_of[static_cast<std::size_t>(c)] * cfg.classes_per_superclass;
          std::uniform_int_distribution<int> pick(0, cfg.classes_per_superclass - 2);
          int sib = base + pick(rng);
          if (sib >= c) ++sib;
          tags(row, static_cast<std::size_t>(sib)) = 1;
          mean = 0.5 * (mean + g.class_means.col(sib));
        }
      } else {
        labels.push_back(c);
      }
      auto dst = out.features.row(row);
      for (std::size_t k = 0; k < dim; ++k) {
        dst[k] = static_cast<float>(mean(static_cast<Eigen::Index>(k)) + noise_sd * normal(rng));
      }
    }
  }
  if (cfg.multi_label) out.tags = std::move(tags);
  else out.labels = std::move(labels);
  return out;
}

}  // namespace

SynthData synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthData g;
  const int c_total = cfg.classes();
  const double root_d = std::sqrt(static_cast<double>(cfg.dim));

  auto rng = make_rng(cfg.seed, 0x53594e54);
  const MatrixXd centers = gaussian_matrix(cfg.dim, cfg.superclasses, rng) * (cfg.separation / root_d);
  const MatrixXd offsets = gaussian_matrix(cfg.dim, c_total, rng) * (cfg.class_spread / root_d);
  g.class_means.resize(cfg.dim, c_total);
  g.superclass_of.resize(static_cast<std::size_t>(c_total));
  for (int c = 0; c < c_total; ++c) {
    const int s = c / cfg.classes_per_superclass;
    g.superclass_of[static_cast<std::size_t>(c)] = s;
    g.class_means.col(c) = centers.col(s) + offsets.col(c);
  }
  g.train = make_split(cfg, g, {cfg.samples_per_class, 0x54524e});
  if (cfg.queries_per_class > 0) g.query = make_split(cfg, g, {cfg.queries_per_class, 0x515259});
  return g;
}

}  // namespace proxyhash
