#include "proxyhash/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "proxyhash/binary_codes.hpp"
#include "proxyhash/code_classifier.hpp"
#include "proxyhash/proxy_design.hpp"
#include "proxyhash/retrieval.hpp"

namespace proxyhash {

ProxyFactory::ProxyFactory(const FeatureDataset& train, const ExperimentConfig& cfg, Warnings* warnings)
    : train_(train), cfg_(cfg), warnings_(warnings), classes_(train.num_classes()) {
  if (classes_ < 2) throw std::invalid_argument("proxy design needs at least two classes");
}

const ProxySet& ProxyFactory::tammes() {
  if (!tammes_) {
    TammesConfig tc;
    tc.restarts = cfg_.tammes_restarts;
    tc.seed = cfg_.seed;
    tammes_ = solve_tammes(classes_, cfg_.bits, tc, warnings_).proxies;
  }
  return *tammes_;
}

const RotationMatrix& ProxyFactory::alignment() {
  if (!rotation_) {
    ItqConfig ic;
    ic.restarts = cfg_.itq_restarts;
    ic.seed = cfg_.seed;
    rotation_ = itq_rotation(tammes(), ic).rotation;
  }
  return *rotation_;
}

const ProxySet& ProxyFactory::binarized() {
  if (!binarized_) binarized_ = binarize(alignment(), tammes(), warnings_);
  return *binarized_;
}

const SimilarityMatrix& ProxyFactory::similarity() {
  if (!similarity_) {
    if (train_.multi_label()) similarity_ = tag_cooccurrence_similarity(*train_.tags);
    else similarity_ = gaussian_similarity(class_means(train_, classes_), warnings_);
  }
  return *similarity_;
}

ProxySet ProxyFactory::make(ProxyKind kind) {
  switch (kind) {
    case ProxyKind::tammes:
      return tammes();
    case ProxyKind::aligned:
      return rotate(alignment(), tammes());
    case ProxyKind::hclm:
      // The Tammes solver never sees the classes, so its column order is
      // already a semantics-agnostic assignment.
      return binarized();
    case ProxyKind::shclm: {
      const GreedyResult g = greedy_assign(similarity(), binarized(), cfg_.greedy_restarts, cfg_.seed);
      return binarized().permuted(g.assignment.map(), ProxyKind::shclm);
    }
    case ProxyKind::random:
      return random_proxies(classes_, cfg_.bits, cfg_.seed);
    case ProxyKind::random_binary:
      return random_binary_proxies(classes_, cfg_.bits, cfg_.seed);
    case ProxyKind::learned:
      return ProxySet::learned(random_proxies(classes_, cfg_.bits, cfg_.seed).weights());
  }
  throw std::invalid_argument("unknown proxy kind");
}

namespace {

TrainConfig variant_training(const ExperimentConfig& cfg, const ProxySet& proxies) {
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  tc.trainable_proxies = proxies.kind() == ProxyKind::learned;
  if (cfg.equalize_proxy_norms && !is_binary(proxies.kind())) {
    tc.logit_scale *= std::sqrt(static_cast<double>(proxies.bits()) / proxies.norm_constant());
  }
  return tc;
}

BinaryCodeDatabase code_database(const MatrixXd& embeddings, const FeatureDataset& data) {
  return {BinaryCodes::from_embeddings(embeddings), data.labels, data.tags};
}

}  // namespace

RetrievalReport score_layer(const std::string& name, const HashingLayer& layer, const FeatureDataset& database,
                            const FeatureDataset& query, const ExperimentConfig& cfg) {
  const MatrixXd db_embed = layer.forward_batch(database.features.to_columns());
  const BinaryCodeDatabase db = code_database(db_embed, database);
  const bool loo = query.size() == 0;
  const BinaryCodeDatabase queries = loo ? db : code_database(layer.forward_batch(query.features.to_columns()), query);

  RetrievalOptions opts;
  opts.top_n = cfg.top_n;
  opts.queries_in_database = loo;
  const MeanApResult ap = mean_ap(queries, db, opts);

  RetrievalReport r;
  r.name = name;
  r.map = ap.map;
  r.queries = ap.per_query.size();
  r.queries_without_relevant = ap.queries_without_relevant;
  r.per_query_ap = ap.per_query;
  r.ks = cfg.precision_ks;
  r.precision = precision_at_k(queries, db, r.ks, opts);
  const ProxySet& proxies = layer.proxies();
  const VectorXd m = margins(proxies);
  r.margins.assign(m.data(), m.data() + m.size());
  r.mean_binarization_error = mean_binarization_error(db_embed);
  r.weight_histogram = proxy_weight_histogram(proxies.weights(), proxies.norm_constant());
  r.binarization_histogram = binarization_error_histogram(db_embed);
  r.duplicate_proxies = count_duplicate_columns(proxies.weights());

  if (!database.multi_label() && !loo) {
    std::vector<int> db_labels = *database.labels;
    std::sort(db_labels.begin(), db_labels.end());
    if (std::unique(db_labels.begin(), db_labels.end()) - db_labels.begin() >= 2) {
      const CodeClassifier clf = CodeClassifier::fit(db.codes, *database.labels, cfg.classifier);
      r.classifier_accuracy = clf.accuracy(queries.codes, *query.labels);
    }
  }
  return r;
}

RetrievalReport evaluate_variant(const std::string& name, const FeatureDataset& train, const FeatureDataset& query,
                                 const ProxySet& proxies, const TrainConfig& train_cfg, const ExperimentConfig& cfg,
                                 Warnings* warnings) {
  TrainResult trained = proxyhash::train(train, proxies, train_cfg, warnings);
  RetrievalReport r = score_layer(name, trained.layer, train, query, cfg);
  r.loss_curve = std::move(trained.epoch_loss);
  return r;
}

ExperimentReport run_ablation(const FeatureDataset& train, const FeatureDataset& query, const ExperimentConfig& cfg) {
  cfg.validate();
  train.validate();
  if (query.size() > 0) query.validate();

  ExperimentReport report;
  report.experiment = "ablation";
  report.config = describe(cfg);
  Warnings warnings;
  ProxyFactory factory(train, cfg, &warnings);
  for (const ProxyKind kind : cfg.kinds) {
    const ProxySet proxies = factory.make(kind);
    report.runs.push_back(evaluate_variant(std::string(to_string(kind)), train, query, proxies,
                                           variant_training(cfg, proxies), cfg, &warnings));
  }
  report.warnings = std::move(warnings.messages);
  return report;
}

std::vector<std::vector<int>> class_folds(int classes, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("need at least two folds");
  if (classes < folds) {
    throw std::invalid_argument("transfer needs at least " + std::to_string(folds) + " classes, got " +
                                std::to_string(classes));
  }
  std::vector<int> order(static_cast<std::size_t>(classes));
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed, 0x464f4c44);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(folds));
  std::size_t pos = 0;
  for (int f = 0; f < folds; ++f) {
    const int size = classes / folds + (f < classes % folds ? 1 : 0);
    out[static_cast<std::size_t>(f)].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                            order.begin() + static_cast<std::ptrdiff_t>(pos + static_cast<std::size_t>(size)));
    std::sort(out[static_cast<std::size_t>(f)].begin(), out[static_cast<std::size_t>(f)].end());
    pos += static_cast<std::size_t>(size);
  }
  return out;
}

namespace {

// Samples whose label is in `keep`, with labels remapped to the position of
// the class inside `keep` when `remap` is set.
FeatureDataset select_classes(const FeatureDataset& data, const std::vector<int>& keep, bool remap) {
  std::vector<int> index_of(static_cast<std::size_t>(data.num_classes()), -1);
  for (std::size_t i = 0; i < keep.size(); ++i) index_of[static_cast<std::size_t>(keep[i])] = static_cast<int>(i);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (index_of[static_cast<std::size_t>((*data.labels)[i])] >= 0) rows.push_back(i);
  FeatureDataset out = data.subset(rows);
  if (remap)
    for (auto& y : *out.labels) y = index_of[static_cast<std::size_t>(y)];
  return out;
}

struct TransferVariant {
  std::string name;
  ProxyKind kind;
  bool triplet;
};

}  // namespace

ExperimentReport run_transfer(const FeatureDataset& train, const FeatureDataset& query, const ExperimentConfig& cfg) {
  cfg.validate();
  train.validate();
  if (query.size() > 0) query.validate();
  if (train.multi_label()) throw std::invalid_argument("transfer protocol needs single-label data");

  const int classes = train.num_classes();
  const auto folds = class_folds(classes, cfg.folds, cfg.seed);
  for (const auto& f : folds)
    if (f.empty() || static_cast<int>(f.size()) == classes) throw std::invalid_argument("degenerate class split");

  const std::vector<TransferVariant> variants = {
      {"hclm", ProxyKind::hclm, false},
      {"shclm", ProxyKind::shclm, false},
      {"shclm+triplet", ProxyKind::shclm, true},
  };

  ExperimentReport report;
  report.experiment = "transfer";
  report.config = describe(cfg);
  Warnings warnings;
  std::vector<std::vector<RetrievalReport>> per_variant(variants.size());

  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<int> seen;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f) seen.insert(seen.end(), folds[g].begin(), folds[g].end());
    std::sort(seen.begin(), seen.end());

    const FeatureDataset seen_train = select_classes(train, seen, true);
    const FeatureDataset unseen_db = select_classes(train, folds[f], false);
    const FeatureDataset unseen_query = query.size() > 0 ? select_classes(query, folds[f], false) : FeatureDataset{};
    if (unseen_db.size() == 0) throw std::invalid_argument("fold " + std::to_string(f + 1) + " has no database samples");

    ProxyFactory factory(seen_train, cfg, &warnings);
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const ProxySet proxies = factory.make(variants[v].kind);
      TrainConfig tc = variant_training(cfg, proxies);
      tc.lambda = variants[v].triplet ? cfg.transfer_lambda : 0.0;

      TrainResult trained = proxyhash::train(seen_train, proxies, tc, &warnings);
      RetrievalReport r = score_layer(variants[v].name + "@fold" + std::to_string(f + 1), trained.layer, unseen_db,
                                      unseen_query, cfg);
      r.loss_curve = std::move(trained.epoch_loss);
      per_variant[v].push_back(std::move(r));
    }
  }

  for (std::size_t v = 0; v < variants.size(); ++v) {
    RetrievalReport summary;
    summary.name = variants[v].name;
    summary.ks = cfg.precision_ks;
    summary.precision.assign(summary.ks.size(), 0.0);
    const auto n = static_cast<double>(per_variant[v].size());
    double accuracy = 0.0;
    bool have_accuracy = true;
    for (const auto& r : per_variant[v]) {
      summary.map += r.map / n;
      summary.queries += r.queries;
      summary.queries_without_relevant += r.queries_without_relevant;
      summary.per_query_ap.insert(summary.per_query_ap.end(), r.per_query_ap.begin(), r.per_query_ap.end());
      for (std::size_t k = 0; k < summary.precision.size(); ++k) summary.precision[k] += r.precision[k] / n;
      summary.mean_binarization_error += r.mean_binarization_error / n;
      if (r.classifier_accuracy) accuracy += *r.classifier_accuracy / n;
      else have_accuracy = false;
    }
    if (have_accuracy) summary.classifier_accuracy = accuracy;
    summary.weight_histogram = Histogram(-2.0, 2.0, 64);
    summary.binarization_histogram = Histogram(0.0, 2.0, 64);
    for (const auto& r : per_variant[v]) {
      for (std::size_t b = 0; b < 64; ++b) {
        summary.weight_histogram.counts[b] += r.weight_histogram.counts[b];
        summary.binarization_histogram.counts[b] += r.binarization_histogram.counts[b];
      }
    }
    report.runs.push_back(std::move(summary));
  }
  for (auto& runs : per_variant)
    for (auto& r : runs) report.runs.push_back(std::move(r));
  report.warnings = std::move(warnings.messages);
  return report;
}

}  // namespace proxyhash
