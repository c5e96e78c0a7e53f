// proxyhash: command-line front end for proxy design, training, encoding,
// retrieval scoring, and the experiment pipelines.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "proxyhash/binary_alignment.hpp"
#include "proxyhash/binary_codes.hpp"
#include "proxyhash/binary_io.hpp"
#include "proxyhash/config.hpp"
#include "proxyhash/kernels/kernels.hpp"
#include "proxyhash/pipelines.hpp"
#include "proxyhash/proxy_design.hpp"
#include "proxyhash/report.hpp"
#include "proxyhash/retrieval.hpp"
#include "proxyhash/semantic_assignment.hpp"
#include "proxyhash/synth.hpp"
#include "proxyhash/theory_checks.hpp"
#include "proxyhash/trainer.hpp"

namespace fs = std::filesystem;
using namespace proxyhash;

namespace {

void flush_warnings(const Warnings& w) {
  for (const auto& m : w.messages) std::cerr << "warning: " << m << '\n';
}

std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string sibling_path(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

// Flags given on the command line override the config file; both feed the
// same key=value table.
struct Overrides {
  std::optional<std::string> config;
  ConfigValues values;

  template <typename T>
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<T>(flag, [this, key](const T& v) {
      std::ostringstream os;
      os.precision(17);
      os << v;
      values[key] = os.str();
    }, help);
  }

  ExperimentConfig build() const {
    ExperimentConfig cfg;
    if (config) apply_config(load_config_file(*config), cfg);
    apply_config(values, cfg);
    cfg.validate();
    return cfg;
  }
};

void add_experiment_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "key=value config file")->check(CLI::ExistingFile);
  o.add<std::uint64_t>(app, "--seed", "seed", "run seed");
  o.add<int>(app, "--bits", "bits", "code length d");
  o.add<int>(app, "--epochs", "epochs", "training epochs");
  o.add<int>(app, "--batch-size", "batch_size", "minibatch size");
  o.add<double>(app, "--lr", "learning_rate", "learning rate");
  o.add<double>(app, "--lambda", "lambda", "triplet weight");
  o.add<double>(app, "--margin", "margin", "triplet margin in bits");
  o.add<std::size_t>(app, "--topn", "top_n", "evaluate only the top N retrievals (0 = all)");
  o.add<std::string>(app, "--kinds", "kinds", "comma-separated proxy kinds");
  o.add<int>(app, "--superclasses", "superclasses", "synthetic superclasses");
  o.add<int>(app, "--classes-per-superclass", "classes_per_superclass", "synthetic classes per superclass");
  o.add<int>(app, "--samples", "samples_per_class", "synthetic database samples per class");
  o.add<int>(app, "--queries", "queries_per_class", "synthetic query samples per class");
}

struct DataPaths {
  std::optional<std::string> features, labels, tags;
  std::optional<std::string> query_features, query_labels, query_tags;

  void add(CLI::App* app) {
    app->add_option("--features", features, "training/database features (.pf or .csv)");
    app->add_option("--labels", labels, "training labels");
    app->add_option("--tags", tags, "training tags");
    app->add_option("--query-features", query_features, "query features");
    app->add_option("--query-labels", query_labels, "query labels");
    app->add_option("--query-tags", query_tags, "query tags");
  }

  // Files when given, otherwise a synthetic draw from the config.
  std::pair<FeatureDataset, FeatureDataset> load(const ExperimentConfig& cfg) const {
    if (!features) {
      SynthData g = synth_generate(cfg.synth);
      return {std::move(g.train), std::move(g.query)};
    }
    FeatureDataset train = ingest(*features, labels, tags);
    FeatureDataset query;
    if (query_features) query = ingest(*query_features, query_labels, query_tags);
    return {std::move(train), std::move(query)};
  }
};

int run_pipeline(const std::string& which, const Overrides& o, const DataPaths& paths, const std::string& out) {
  ExperimentConfig cfg = o.build();
  auto [train, query] = paths.load(cfg);
  const ExperimentReport report = which == "ablation" ? run_ablation(train, query, cfg) : run_transfer(train, query, cfg);
  emit_report(report, out);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& r : report.runs) {
    if (r.name.find('@') != std::string::npos) continue;
    std::printf("%-16s mAP %.4f", r.name.c_str(), r.map);
    if (r.classifier_accuracy) std::printf("  acc %.4f", *r.classifier_accuracy);
    std::printf("  binerr %.4f\n", r.mean_binarization_error);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hash-consistent proxy design, training, and Hamming retrieval"};
  app.require_subcommand(1);
  std::string isa;
  app.add_option("--isa", isa, "force kernel ISA (scalar|avx2)");

  // synth
  auto* synth = app.add_subcommand("synth", "generate hierarchical synthetic features");
  Overrides synth_o;
  std::string synth_out = "data";
  synth->add_option("--config", synth_o.config, "key=value config file")->check(CLI::ExistingFile);
  synth_o.add<std::uint64_t>(synth, "--seed", "seed", "seed");
  synth_o.add<int>(synth, "--superclasses", "superclasses", "superclasses");
  synth_o.add<int>(synth, "--classes-per-superclass", "classes_per_superclass", "classes per superclass");
  synth_o.add<int>(synth, "--samples", "samples_per_class", "database samples per class");
  synth_o.add<int>(synth, "--queries", "queries_per_class", "query samples per class");
  synth_o.add<int>(synth, "--dim", "dim", "feature dimension D");
  synth_o.add<double>(synth, "--noise", "noise", "intra-class noise scale");
  synth_o.add<double>(synth, "--separation", "separation", "superclass center scale");
  synth_o.add<double>(synth, "--spread", "class_spread", "class offset scale");
  synth->add_flag_function("--multi-label", [&](std::int64_t) { synth_o.values["multi_label"] = "true"; },
                           "emit tags instead of labels");
  synth->add_option("--out-dir", synth_out, "output directory");

  // proxies
  auto* proxies = app.add_subcommand("proxies", "design, align, or assign proxies");
  proxies->require_subcommand(1);

  auto* design = proxies->add_subcommand("design", "solve the Tammes problem");
  int design_c = 0, design_d = 0, design_restarts = 8;
  std::uint64_t design_seed = 0;
  std::string design_out;
  design->add_option("--classes", design_c, "number of classes C")->required();
  design->add_option("--bits", design_d, "code length d")->required();
  design->add_option("--restarts", design_restarts, "random restarts");
  design->add_option("--seed", design_seed, "seed");
  design->add_option("--out", design_out, "output proxy file")->required();

  auto* align = proxies->add_subcommand("align", "rotate real proxies toward binary vertices and binarize");
  std::string align_in, align_out, align_real_out, align_trace;
  int align_restarts = 8;
  std::uint64_t align_seed = 0;
  align->add_option("--in,--proxies", align_in, "real-valued proxy file")->required()->check(CLI::ExistingFile);
  align->add_option("--out", align_out, "binarized (HCLM) proxy file")->required();
  align->add_option("--aligned-out", align_real_out, "rotated real-valued proxy file");
  align->add_option("--trace", align_trace, "quantization-error trace CSV (default: <out>_trace.csv)");
  align->add_option("--restarts", align_restarts, "random restarts");
  align->add_option("--seed", align_seed, "seed");

  auto* assign = proxies->add_subcommand("assign", "assign binary proxies to classes by semantic similarity");
  std::string assign_in, assign_out;
  std::optional<std::string> assign_features, assign_labels, assign_tags;
  int assign_restarts = 16;
  std::uint64_t assign_seed = 0;
  assign->add_option("--proxies", assign_in, "binary proxy file")->required()->check(CLI::ExistingFile);
  assign->add_option("--features", assign_features, "features for class-mean similarity");
  assign->add_option("--labels", assign_labels, "labels for class-mean similarity");
  assign->add_option("--tags", assign_tags, "tags for co-occurrence similarity");
  std::string assign_similarity, assign_sim_csv;
  assign->add_option("--similarity", assign_similarity, "means|cooccur (default: cooccur with --tags, else means)")
      ->check(CLI::IsMember({"means", "cooccur"}));
  assign->add_option("--similarity-csv", assign_sim_csv, "write the class similarity matrix as CSV");
  assign->add_option("--restarts", assign_restarts, "greedy restarts");
  assign->add_option("--seed", assign_seed, "seed");
  assign->add_option("--out", assign_out, "output proxy file")->required();

  // train
  auto* trainc = app.add_subcommand("train", "train the hashing layer against fixed proxies");
  std::string train_features, train_proxies, train_out, train_loss_csv;
  std::optional<std::string> train_labels, train_tags;
  TrainConfig tc;
  trainc->add_option("--features", train_features, "feature file")->required();
  trainc->add_option("--labels", train_labels, "labels file");
  trainc->add_option("--tags", train_tags, "tags file");
  trainc->add_option("--proxies", train_proxies, "proxy file")->required()->check(CLI::ExistingFile);
  trainc->add_option("--lambda", tc.lambda, "triplet weight");
  trainc->add_option("--margin", tc.triplet_margin, "triplet margin in bits");
  trainc->add_option("--epochs", tc.epochs, "epochs");
  trainc->add_option("--batch-size", tc.batch_size, "minibatch size");
  trainc->add_option("--lr", tc.learning_rate, "learning rate");
  trainc->add_option("--momentum", tc.momentum, "momentum");
  trainc->add_option("--logit-scale", tc.logit_scale, "logit scale");
  trainc->add_option("--seed", tc.seed, "seed");
  trainc->add_flag("--learn-proxies", tc.trainable_proxies, "release the proxies for training");
  trainc->add_option("--out", train_out, "output layer file")->required();
  trainc->add_option("--loss-csv", train_loss_csv, "per-epoch loss CSV (default: <out>_loss.csv)");

  // encode
  auto* encodec = app.add_subcommand("encode", "binarize features into packed codes");
  std::string enc_layer, enc_features, enc_out;
  encodec->add_option("--layer", enc_layer, "layer file")->required()->check(CLI::ExistingFile);
  encodec->add_option("--features", enc_features, "feature file")->required();
  encodec->add_option("--out", enc_out, "output code file")->required();

  // retrieve
  auto* retrieve = app.add_subcommand("retrieve", "rank the database for each query and score retrieval");
  std::string ret_db, ret_queries, ret_report;
  std::optional<std::string> ret_db_labels, ret_q_labels, ret_db_tags, ret_q_tags;
  std::size_t ret_topn = 0;
  std::vector<std::size_t> ret_ks{1, 10, 50, 100};
  bool ret_self = false;
  retrieve->add_option("--db", ret_db, "database code file")->required()->check(CLI::ExistingFile);
  retrieve->add_option("--queries", ret_queries, "query code file")->required()->check(CLI::ExistingFile);
  retrieve->add_option("--labels,--db-labels", ret_db_labels, "database labels");
  retrieve->add_option("--query-labels", ret_q_labels, "query labels (defaults to --labels with --self)");
  retrieve->add_option("--db-tags", ret_db_tags, "database tags");
  retrieve->add_option("--query-tags", ret_q_tags, "query tags");
  retrieve->add_option("--topn", ret_topn, "evaluate only the top N retrievals (0 = all)");
  retrieve->add_option("--ks", ret_ks, "precision@K cut-offs")->delimiter(',');
  retrieve->add_flag("--self", ret_self, "query i is database item i; excluded from its own ranking");
  retrieve->add_option("--report", ret_report, "report JSON path");

  // verify
  auto* verify = app.add_subcommand("verify", "numerical checks of the softmax equivalence and rotation ambiguity");
  std::string verify_suite;
  int verify_trials = 100;
  std::uint64_t verify_seed = 0;
  verify->add_option("--suite", verify_suite, "equivalence|rotation")
      ->required()
      ->check(CLI::IsMember({"equivalence", "rotation"}));
  verify->add_option("--trials", verify_trials, "random instances")->check(CLI::PositiveNumber);
  verify->add_option("--seed", verify_seed, "seed");

  // ablation / transfer
  auto* ablation = app.add_subcommand("ablation", "train and score every proxy variant on the same data");
  Overrides abl_o;
  DataPaths abl_paths;
  std::string abl_out = "ablation.json";
  add_experiment_flags(ablation, abl_o);
  abl_paths.add(ablation);
  ablation->add_option("--out,--report", abl_out, "report JSON path");

  auto* transfer = app.add_subcommand("transfer", "leave-one-fold-out evaluation on unseen classes");
  Overrides tr_o;
  DataPaths tr_paths;
  std::string tr_out = "transfer.json";
  add_experiment_flags(transfer, tr_o);
  tr_paths.add(transfer);
  tr_o.add<int>(transfer, "--folds", "folds", "class-disjoint folds");
  transfer->add_option("--out,--report", tr_out, "report JSON path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!isa.empty()) kernels::force_isa(isa == "scalar" ? kernels::Isa::scalar : kernels::Isa::avx2);
    Warnings warnings;

    if (synth->parsed()) {
      ExperimentConfig cfg = synth_o.build();
      const SynthData g = synth_generate(cfg.synth);
      const fs::path dir = synth_out;
      fs::create_directories(dir);
      save_features(g.train.features, dir / "train.pf");
      save_features(g.query.features, dir / "query.pf");
      if (cfg.synth.multi_label) {
        save_tags(*g.train.tags, dir / "train.tags");
        save_tags(*g.query.tags, dir / "query.tags");
      } else {
        save_labels(*g.train.labels, dir / "train.lbl");
        save_labels(*g.query.labels, dir / "query.lbl");
      }
      std::printf("wrote %zu train and %zu query samples to %s\n", g.train.size(), g.query.size(), dir.c_str());
    } else if (design->parsed()) {
      TammesConfig cfg;
      cfg.restarts = design_restarts;
      cfg.seed = design_seed;
      const TammesResult r = solve_tammes(design_c, design_d, cfg, &warnings);
      save_proxies(r.proxies, design_out);
      std::printf("min squared distance %.12f (restart %d)\n", r.min_sq_distance, r.best_restart);
    } else if (align->parsed()) {
      const ProxySet in = load_proxies(align_in);
      ItqConfig cfg;
      cfg.restarts = align_restarts;
      cfg.seed = align_seed;
      const AlignmentResult r = itq_rotation(in, cfg);
      save_proxies(binarize(r.rotation, in, &warnings), align_out);
      if (!align_real_out.empty()) save_proxies(rotate(r.rotation, in), align_real_out);
      if (align_trace.empty()) align_trace = sibling_path(align_out, "_trace.csv");
      std::string csv = "iteration,quantization_error\n";
      for (std::size_t i = 0; i < r.trace.errors.size(); ++i) csv += std::to_string(i) + "," + csv_number(r.trace.errors[i]) + "\n";
      write_text_atomic(align_trace, csv);
      std::printf("quantization error %.12f after %d iterations (restart %d)\n", r.trace.errors.back(),
                  r.trace.iterations, r.best_restart);
    } else if (assign->parsed()) {
      const ProxySet in = load_proxies(assign_in);
      if (assign_similarity.empty()) assign_similarity = assign_tags ? "cooccur" : "means";
      std::optional<SimilarityMatrix> sim;
      if (assign_similarity == "cooccur") {
        if (!assign_tags) throw std::invalid_argument("--similarity cooccur needs --tags");
        sim = tag_cooccurrence_similarity(load_tags(*assign_tags));
      } else {
        if (!assign_features || !assign_labels) throw std::invalid_argument("--similarity means needs --features and --labels");
        const FeatureDataset data = ingest(*assign_features, assign_labels, std::nullopt);
        sim = gaussian_similarity(class_means(data, in.classes()), &warnings);
      }
      if (!assign_sim_csv.empty()) {
        std::string csv;
        const MatrixXd& v = sim->values();
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
          for (Eigen::Index j = 0; j < v.cols(); ++j) csv += (j ? "," : "") + csv_number(v(i, j));
          csv += "\n";
        }
        write_text_atomic(assign_sim_csv, csv);
      }
      const GreedyResult g = greedy_assign(*sim, in, assign_restarts, assign_seed);
      save_proxies(in.permuted(g.assignment.map(), ProxyKind::shclm), assign_out);
      std::printf("assignment objective %.12f (from %.12f)\n", g.objective, g.initial_objective);
    } else if (trainc->parsed()) {
      const FeatureDataset data = ingest(train_features, train_labels, train_tags);
      ProxySet proxies = load_proxies(train_proxies);
      if (tc.trainable_proxies) proxies = ProxySet::learned(proxies.weights());
      const TrainResult r = train(data, proxies, tc, &warnings);
      save_layer(r.layer, train_out);
      if (train_loss_csv.empty()) train_loss_csv = sibling_path(train_out, "_loss.csv");
      std::string csv = "epoch,loss\n";
      for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) csv += std::to_string(e + 1) + "," + csv_number(r.epoch_loss[e]) + "\n";
      write_text_atomic(train_loss_csv, csv);
      std::printf("final epoch loss %.6f\n", r.epoch_loss.empty() ? 0.0 : r.epoch_loss.back());
    } else if (encodec->parsed()) {
      const HashingLayer layer = load_layer(enc_layer);
      const FeatureMatrix features =
          fs::path(enc_features).extension() == ".csv" ? load_features_csv(enc_features) : load_features(enc_features);
      save_codes(encode(layer, features), enc_out);
    } else if (retrieve->parsed()) {
      BinaryCodeDatabase db{load_codes(ret_db), std::nullopt, std::nullopt};
      BinaryCodeDatabase q{load_codes(ret_queries), std::nullopt, std::nullopt};
      if (ret_db_labels) db.labels = load_labels(*ret_db_labels);
      if (ret_db_tags) db.tags = load_tags(*ret_db_tags);
      if (ret_q_labels) q.labels = load_labels(*ret_q_labels);
      else if (ret_self) q.labels = db.labels;
      if (ret_q_tags) q.tags = load_tags(*ret_q_tags);
      else if (ret_self) q.tags = db.tags;
      for (auto* side : {&db, &q}) {
        if (side->labels)
          for (auto& y : *side->labels) --y;  // files are 1-based
        const std::size_t n = side->labels ? side->labels->size() : side->tags ? side->tags->rows : 0;
        if (n != side->codes.size()) throw std::invalid_argument("relevance payload does not match code count");
      }
      RetrievalOptions opts;
      opts.top_n = ret_topn;
      opts.queries_in_database = ret_self;
      const MeanApResult ap = mean_ap(q, db, opts);
      ExperimentReport report;
      report.experiment = "retrieve";
      report.config = {{"top_n", std::to_string(ret_topn)}, {"self", ret_self ? "true" : "false"}};
      RetrievalReport r;
      r.name = "retrieve";
      r.map = ap.map;
      r.queries = ap.per_query.size();
      r.queries_without_relevant = ap.queries_without_relevant;
      r.per_query_ap = ap.per_query;
      r.ks = ret_ks;
      r.precision = precision_at_k(q, db, r.ks, opts);
      report.runs.push_back(std::move(r));
      if (!ret_report.empty()) emit_report(report, ret_report);
      std::printf("mAP %.6f over %zu queries\n", ap.map, ap.per_query.size());
    } else if (verify->parsed()) {
      const SuiteResult r = verify_suite == "equivalence" ? run_equivalence_suite(verify_trials, verify_seed)
                                                          : run_rotation_suite(verify_trials, verify_seed);
      std::printf("%s: %d/%d trials passed, worst discrepancy %.3e", verify_suite.c_str(), r.trials - r.failures,
                  r.trials, r.worst);
      if (verify_suite == "rotation") std::printf(", codes changed in %d", r.codes_changed);
      std::printf("\n");
      return r.passed() ? 0 : 1;
    } else if (ablation->parsed()) {
      return run_pipeline("ablation", abl_o, abl_paths, abl_out);
    } else if (transfer->parsed()) {
      return run_pipeline("transfer", tr_o, tr_paths, tr_out);
    }
    flush_warnings(warnings);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
