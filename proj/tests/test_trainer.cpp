#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "proxyhash/binary_alignment.hpp"
#include "proxyhash/code_classifier.hpp"
#include "proxyhash/losses.hpp"
#include "proxyhash/proxy_design.hpp"
#include "proxyhash/synth.hpp"
#include "proxyhash/trainer.hpp"
#include "test_support.hpp"

using namespace proxyhash;
using proxyhash::testing::max_relative_error;
using proxyhash::testing::numeric_gradient;

namespace {

FeatureDataset random_dataset(std::size_t n, std::size_t dim, int classes, std::mt19937_64& rng) {
  FeatureDataset data;
  data.features = FeatureMatrix(n, dim);
  std::normal_distribution<float> g;
  for (auto& v : data.features.values) v = g(rng);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
  data.labels = labels;
  return data;
}

FeatureDataset random_tagged(std::size_t n, std::size_t dim, std::size_t tags, std::mt19937_64& rng) {
  FeatureDataset data;
  data.features = FeatureMatrix(n, dim);
  std::normal_distribution<float> g;
  for (auto& v : data.features.values) v = g(rng);
  TagMatrix t(n, tags);
  std::bernoulli_distribution coin(0.4);
  for (std::size_t i = 0; i < n; ++i) {
    t(i, i % tags) = 1;
    for (std::size_t k = 0; k < tags; ++k)
      if (coin(rng)) t(i, k) = 1;
  }
  data.tags = t;
  return data;
}

HashingLayer random_layer(int input_dim, const ProxySet& p, std::mt19937_64& rng) {
  return HashingLayer(gaussian_matrix(input_dim, p.bits(), rng) * 0.4, gaussian_matrix(p.bits(), 1, rng).col(0) * 0.2, p);
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// Finite-difference check of gradients() over the projection and the bias.
void check_layer_gradients(const HashingLayer& layer, const TrainingSet& set, std::span<const std::size_t> batch,
                           std::span<const Triplet> triplets, const LossSettings& s) {
  const LayerGradients g = gradients(layer, set, batch, triplets, s);
  const auto loss_at = [&](const MatrixXd& l, const VectorXd& b) {
    return joint_loss(HashingLayer(l, b, layer.proxies()), set, batch, triplets, s).total;
  };
  const MatrixXd num_l = numeric_gradient([&](const MatrixXd& l) { return loss_at(l, layer.bias()); }, layer.projection());
  const MatrixXd num_b =
      numeric_gradient([&](const MatrixXd& b) { return loss_at(layer.projection(), b.col(0)); }, MatrixXd(layer.bias()));
  EXPECT_LT(max_relative_error(g.projection, num_l), 1e-5);
  EXPECT_LT(max_relative_error(g.bias, num_b), 1e-5);
}

TEST(Forward, ZeroLayerGivesZero) {
  const ProxySet p = random_binary_proxies(3, 5, 0);
  const HashingLayer layer(MatrixXd::Zero(4, 5), VectorXd::Zero(5), p);
  EXPECT_EQ(layer.forward(VectorXd::Constant(4, 3.0)), VectorXd::Zero(5));
}

TEST(Forward, SaturatesTowardOne) {
  const ProxySet p = random_binary_proxies(3, 5, 0);
  const HashingLayer layer(MatrixXd::Zero(4, 5), VectorXd::Constant(5, 30.0), p);
  const VectorXd nu = layer.forward(VectorXd::Ones(4));
  for (double v : nu) {
    EXPECT_LE(v, 1.0);
    EXPECT_GT(v, 1.0 - 1e-12);
  }
}

TEST(Forward, MatchesScalarLoop) {
  auto rng = make_rng(1);
  const ProxySet p = random_binary_proxies(4, 19, 0);
  const HashingLayer layer = random_layer(33, p, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd q = gaussian_matrix(33, 1, rng).col(0);
    const VectorXd nu = layer.forward(q);
    for (int j = 0; j < 19; ++j) {
      double z = layer.bias()(j);
      for (int i = 0; i < 33; ++i) z += layer.projection()(i, j) * q(i);
      EXPECT_NEAR(nu(j), std::tanh(z), 1e-15);
    }
    EXPECT_LT((layer.forward_batch(q) - nu).cwiseAbs().maxCoeff(), 1e-15);
  }
  EXPECT_THROW(layer.forward(VectorXd::Zero(32)), std::invalid_argument);
}

TEST(SampleTriplets, SingleClassBatchHasNone) {
  FeatureDataset d;
  d.features = FeatureMatrix(4, 2);
  d.labels = std::vector<int>{0, 0, 0, 0};
  const TrainingSet set(d);
  const auto idx = all_indices(4);
  EXPECT_TRUE(sample_triplets(set, idx, 1).empty());
}

TEST(SampleTriplets, TwoByTwoGivesFour) {
  FeatureDataset d;
  d.features = FeatureMatrix(4, 2);
  d.labels = std::vector<int>{0, 1, 0, 1};
  const TrainingSet set(d);
  const auto idx = all_indices(4);
  const auto t = sample_triplets(set, idx, 1);
  ASSERT_EQ(t.size(), 4u);
  for (const auto& tr : t) {
    EXPECT_NE(tr.anchor, tr.positive);
    EXPECT_TRUE(set.similar(tr.anchor, tr.positive));
    EXPECT_FALSE(set.similar(tr.anchor, tr.negative));
  }
  EXPECT_EQ(t, sample_triplets(set, idx, 1));
}

TEST(SampleTriplets, MultiLabelPositivesShareTagNegativesShareNone) {
  TagMatrix tags(6, 3);
  tags(0, 0) = 1;
  tags(1, 0) = tags(1, 1) = 1;
  tags(2, 1) = 1;
  tags(3, 2) = 1;
  tags(4, 2) = tags(4, 0) = 1;
  tags(5, 1) = 1;
  FeatureDataset d;
  d.features = FeatureMatrix(6, 2);
  d.tags = tags;
  const TrainingSet set(d);
  const auto idx = all_indices(6);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const auto& t : sample_triplets(set, idx, seed)) {
      bool pos = false, neg = false;
      for (std::size_t k = 0; k < 3; ++k) {
        pos |= tags(t.anchor, k) && tags(t.positive, k);
        neg |= tags(t.anchor, k) && tags(t.negative, k);
      }
      EXPECT_TRUE(pos);
      EXPECT_FALSE(neg);
    }
  }
}

TEST(JointLoss, ComponentwiseOracle) {
  for (int trial = 0; trial < 10; ++trial) {
    auto rng = make_rng(50 + trial);
    const auto data = random_dataset(12, 6, 3, rng);
    const TrainingSet set(data);
    const ProxySet p = random_binary_proxies(3, 8, trial);
    const HashingLayer layer = random_layer(6, p, rng);
    const auto idx = all_indices(12);
    const auto triplets = sample_triplets(set, idx, trial);
    ASSERT_FALSE(triplets.empty());
    double proxy = 0.0;
    for (std::size_t i : idx)
      proxy += proxy_loss_single(layer.forward(set.inputs().col(i)), data.labels->at(i), p.weights(), 1.0);
    proxy /= 12.0;
    double trip = 0.0;
    for (const auto& t : triplets)
      trip += triplet_loss(layer.forward(set.inputs().col(t.anchor)), layer.forward(set.inputs().col(t.positive)),
                           layer.forward(set.inputs().col(t.negative)), 2.0);
    trip /= static_cast<double>(triplets.size());

    const LossSettings zero{0.0, 2.0, 1.0};
    const BatchLoss l0 = joint_loss(layer, set, idx, triplets, zero);
    EXPECT_EQ(l0.total, l0.proxy);
    EXPECT_NEAR(l0.proxy, proxy, 1e-12);

    const LossSettings one{1.0, 2.0, 1.0};
    const BatchLoss l1 = joint_loss(layer, set, idx, triplets, one);
    EXPECT_NEAR(l1.triplet, trip, 1e-12);
    EXPECT_DOUBLE_EQ(l1.total, l1.proxy + l1.triplet);
    EXPECT_NEAR(l1.total, proxy + trip, 1e-12);
  }
}

TEST(JointLoss, NoTripletsWarns) {
  FeatureDataset d;
  d.features = FeatureMatrix(3, 2);
  d.labels = std::vector<int>{1, 1, 1};
  const TrainingSet set(d);
  const ProxySet p = random_binary_proxies(2, 4, 0);
  const HashingLayer layer(MatrixXd::Zero(2, 4), VectorXd::Zero(4), p);
  Warnings w;
  const auto idx = all_indices(3);
  const auto l = joint_loss(layer, set, idx, {}, LossSettings{1.0, 2.0, 1.0}, &w);
  EXPECT_EQ(l.triplet, 0.0);
  EXPECT_FALSE(w.empty());
}

TEST(Gradients, BiasAtUniformLogitsMatchesSoftmaxResidual) {
  // L = 0, b = 0: nu = 0, all logits equal. dL/db = diag(1 - nu^2) (W p - w_y) = mean over batch of (mean_k w_k - w_y).
  FeatureDataset d;
  d.features = FeatureMatrix(4, 3);
  d.labels = std::vector<int>{0, 1, 2, 2};
  const TrainingSet set(d);
  const ProxySet p = random_binary_proxies(3, 6, 7);
  const HashingLayer layer(MatrixXd::Zero(3, 6), VectorXd::Zero(6), p);
  const auto idx = all_indices(4);
  const LayerGradients g = gradients(layer, set, idx, {}, LossSettings{0.0, 2.0, 1.0});
  const VectorXd mean_w = p.weights().rowwise().mean();
  VectorXd expect = VectorXd::Zero(6);
  for (int y : *d.labels) expect += (mean_w - p.weights().col(y)) / 4.0;
  EXPECT_LT((g.bias - expect).cwiseAbs().maxCoeff(), 1e-15);
  check_layer_gradients(layer, set, idx, {}, LossSettings{0.0, 2.0, 1.0});
}

TEST(Gradients, SingleLabelMatchesFiniteDifferences) {
  for (int trial = 0; trial < 20; ++trial) {
    auto rng = make_rng(500 + trial);
    const auto data = random_dataset(8, 5, 4, rng);
    const TrainingSet set(data);
    const ProxySet p = random_binary_proxies(4, 6, trial);
    const auto idx = all_indices(8);
    check_layer_gradients(random_layer(5, p, rng), set, idx, {}, LossSettings{0.0, 2.0, 1.0 + 0.05 * trial});
  }
}

TEST(Gradients, MultiLabelMatchesFiniteDifferences) {
  for (int trial = 0; trial < 20; ++trial) {
    auto rng = make_rng(600 + trial);
    const auto data = random_tagged(8, 5, 4, rng);
    const TrainingSet set(data);
    const ProxySet p = random_proxies(4, 6, trial);
    const auto idx = all_indices(8);
    check_layer_gradients(random_layer(5, p, rng), set, idx, {}, LossSettings{0.0, 2.0, 1.0});
  }
}

TEST(Gradients, JointMatchesFiniteDifferences) {
  for (int trial = 0; trial < 20; ++trial) {
    auto rng = make_rng(700 + trial);
    const auto data = random_dataset(10, 5, 3, rng);
    const TrainingSet set(data);
    const ProxySet p = random_binary_proxies(3, 6, trial);
    const auto idx = all_indices(10);
    const auto triplets = sample_triplets(set, idx, trial);
    check_layer_gradients(random_layer(5, p, rng), set, idx, triplets, LossSettings{0.7, 1.5, 1.0});
  }
}

TEST(Gradients, ProxyGradientMatchesFiniteDifferences) {
  for (int trial = 0; trial < 5; ++trial) {
    auto rng = make_rng(800 + trial);
    const auto data = random_dataset(8, 5, 4, rng);
    const TrainingSet set(data);
    const ProxySet p = random_proxies(4, 6, trial);
    const HashingLayer layer = random_layer(5, p, rng);
    const auto idx = all_indices(8);
    const LossSettings s{0.0, 2.0, 2.0};
    const MatrixXd g = proxy_gradient(layer, set, idx, s);
    const MatrixXd num = numeric_gradient(
        [&](const MatrixXd& w) {
          return joint_loss(HashingLayer(layer.projection(), layer.bias(), ProxySet::learned(w)), set, idx, {}, s).total;
        },
        p.weights());
    EXPECT_LT(max_relative_error(g, num), 1e-5);
  }
}

SynthData separable(int classes, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.superclasses = classes;
  cfg.classes_per_superclass = 1;
  cfg.samples_per_class = 60;
  cfg.queries_per_class = 10;
  cfg.dim = 16;
  cfg.noise = 0.5;
  cfg.separation = 6.0;
  cfg.seed = seed;
  return synth_generate(cfg);
}

TEST(Train, SeparableLossDrops) {
  const auto data = separable(2, 1);
  const ProxySet p = random_binary_proxies(2, 8, 1);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.05;
  cfg.lambda = 0.0;
  const auto r = train(data.train, p, cfg);
  ASSERT_EQ(r.epoch_loss.size(), 20u);
  EXPECT_LT(r.epoch_loss.back(), 0.1 * r.first_batch_proxy_loss);
  for (std::size_t e = 1; e < r.epoch_loss.size(); ++e) EXPECT_LE(r.epoch_loss[e], r.epoch_loss[e - 1] + 1e-3);
}

TEST(Train, DeterministicAndProxiesUntouched) {
  const auto data = separable(3, 2);
  const ProxySet p = random_binary_proxies(3, 8, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  const auto a = train(data.train, p, cfg);
  const auto b = train(data.train, p, cfg);
  EXPECT_EQ(a.layer.projection(), b.layer.projection());
  EXPECT_EQ(a.layer.bias(), b.layer.bias());
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  EXPECT_TRUE(a.layer.proxies() == p);
  cfg.seed = 99;
  EXPECT_NE(train(data.train, p, cfg).layer.projection(), a.layer.projection());
}

TEST(Train, LambdaDoesNotChangeFirstBatchProxyLoss) {
  const auto data = separable(3, 3);
  const ProxySet p = random_binary_proxies(3, 8, 3);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  cfg.lambda = 0.0;
  const double l0 = train(data.train, p, cfg).first_batch_proxy_loss;
  cfg.lambda = 1.0;
  EXPECT_EQ(train(data.train, p, cfg).first_batch_proxy_loss, l0);
}

TEST(Train, EmbeddingsAlignWithOwnProxy) {
  const auto data = separable(4, 4);
  const auto tammes = solve_tammes(4, 8, TammesConfig{});
  const ProxySet hclm = binarize(itq_rotation(tammes.proxies, ItqConfig{}).rotation, tammes.proxies);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 16;
  cfg.lambda = 0.0;
  const auto r = train(data.train, hclm, cfg);
  const MatrixXd nu = r.layer.forward_batch(data.query.features.to_columns());
  const MatrixXd w = hclm.weights().colwise().normalized();
  for (int y = 0; y < 4; ++y) {
    VectorXd mean_cos = VectorXd::Zero(4);
    int count = 0;
    for (Eigen::Index i = 0; i < nu.cols(); ++i) {
      if ((*data.query.labels)[i] != y) continue;
      mean_cos += w.transpose() * nu.col(i).normalized();
      ++count;
    }
    mean_cos /= count;
    for (int c = 0; c < 4; ++c)
      if (c != y) {
        EXPECT_GT(mean_cos(y), mean_cos(c)) << "class " << y;
      }
  }
}

TEST(Train, BinaryProxiesSaturateMoreThanTheirRealCounterpart) {
  // Same directions and norms, only binary vs real entries: HCLM against the aligned set scaled to norm sqrt(d).
  const auto data = separable(10, 5);
  const auto tammes = solve_tammes(10, 8, TammesConfig{});
  const auto rot = itq_rotation(tammes.proxies, ItqConfig{});
  const ProxySet aligned = rotate(rot.rotation, tammes.proxies);
  const ProxySet hclm = binarize(rot.rotation, tammes.proxies);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 16;
  cfg.lambda = 0.0;
  const auto hb = train(data.train, hclm, cfg);
  cfg.logit_scale = std::sqrt(8.0);
  const auto ab = train(data.train, aligned, cfg);
  const auto error = [&](const HashingLayer& l) {
    const MatrixXd e = l.forward_batch(data.query.features.to_columns());
    return (e - sign_matrix(e)).squaredNorm() / static_cast<double>(e.size());
  };
  EXPECT_LT(error(hb.layer), error(ab.layer));
}

TEST(Train, RejectsBadConfigAndShapes) {
  const auto data = separable(3, 6);
  TrainConfig cfg;
  cfg.momentum = 1.0;
  EXPECT_THROW(train(data.train, random_binary_proxies(3, 8, 0), cfg), std::invalid_argument);
  EXPECT_THROW(train(data.train, random_binary_proxies(2, 8, 0), TrainConfig{}), std::invalid_argument);
}

TEST(CodeClassifier, SeparableCodesReachFullAccuracy) {
  MatrixXd signs(8, 40);
  std::vector<int> labels(40);
  for (int i = 0; i < 40; ++i) {
    labels[i] = 10 + i % 4;
    signs.col(i) = -VectorXd::Ones(8);
    signs((i % 4) * 2, i) = 1;
    signs((i % 4) * 2 + 1, i) = 1;
  }
  const auto codes = BinaryCodes::from_embeddings(signs);
  const auto clf = CodeClassifier::fit(codes, labels);
  EXPECT_EQ(clf.classes(), (std::vector<int>{10, 11, 12, 13}));
  EXPECT_DOUBLE_EQ(clf.accuracy(codes, labels), 1.0);
}

TEST(CodeClassifier, RandomLabelsAreNearChance) {
  double total = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    auto rng = make_rng(seed);
    const auto train_codes = BinaryCodes::from_embeddings(gaussian_matrix(16, 200, rng));
    const auto test_codes = BinaryCodes::from_embeddings(gaussian_matrix(16, 200, rng));
    std::vector<int> ytr(200), yte(200);
    for (int i = 0; i < 200; ++i) {
      ytr[i] = i % 2;
      yte[i] = (i / 2) % 2;
    }
    const double acc = CodeClassifier::fit(train_codes, ytr).accuracy(test_codes, yte);
    total += acc;
    EXPECT_NEAR(acc, 0.5, 0.15);
  }
  EXPECT_NEAR(total / 10.0, 0.5, 0.1);
}

TEST(CodeClassifier, GradientMatchesFiniteDifferences) {
  for (int trial = 0; trial < 20; ++trial) {
    auto rng = make_rng(900 + trial);
    const MatrixXd x = sign_matrix(gaussian_matrix(6, 15, rng));
    std::vector<int> y(15);
    for (int i = 0; i < 15; ++i) y[i] = (i * 7 + trial) % 3;
    const MatrixXd w = gaussian_matrix(3, 7, rng) * 0.5;
    MatrixXd g;
    classifier_loss(w, x, y, 1e-2, &g);
    const MatrixXd num = numeric_gradient([&](const MatrixXd& m) { return classifier_loss(m, x, y, 1e-2); }, w);
    EXPECT_LT(max_relative_error(g, num), 1e-5);
  }
}

TEST(CodeClassifier, RejectsSingleClass) {
  const auto codes = BinaryCodes::from_embeddings(MatrixXd::Ones(4, 3));
  const std::vector<int> labels{2, 2, 2};
  EXPECT_THROW(CodeClassifier::fit(codes, labels), std::invalid_argument);
}

}  // namespace
