#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "proxyhash/proxy_design.hpp"
#include "proxyhash/semantic_assignment.hpp"

using namespace proxyhash;

namespace {

SimilarityMatrix random_similarity(int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd s = MatrixXd::Ones(c, c);
  for (int i = 0; i < c; ++i)
    for (int j = i + 1; j < c; ++j) s(i, j) = s(j, i) = u(rng);
  return SimilarityMatrix(s, SimilaritySource::user_supplied);
}

// Written out independently of the library: explicit double loop over ordered pairs.
double objective_oracle(const MatrixXd& s, const MatrixXd& w, const std::vector<int>& a) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (i == j) continue;
      double dot = 0.0;
      for (Eigen::Index k = 0; k < w.rows(); ++k) dot += w(k, a[i]) * w(k, a[j]);
      total += s(i, j) * (1.0 - dot);
    }
  return total;
}

double brute_force_oracle(const MatrixXd& s, const MatrixXd& w) {
  std::vector<int> perm(s.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do best = std::min(best, objective_oracle(s, w, perm));
  while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

FeatureDataset labelled(const std::vector<std::vector<float>>& rows, std::vector<int> labels) {
  FeatureDataset data;
  data.features = FeatureMatrix(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), data.features.row(i).begin());
  data.labels = std::move(labels);
  return data;
}

TEST(ClassMeans, AveragesAndSingletons) {
  const auto data = labelled({{1, 1}, {3, 3}, {5, -2}}, {0, 0, 1});
  const ClassMeans m = class_means(data);
  EXPECT_DOUBLE_EQ(m.means(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(m.means(1, 0), 2.0);
  EXPECT_DOUBLE_EQ(m.means(0, 1), 5.0);
  EXPECT_DOUBLE_EQ(m.means(1, 1), -2.0);
  EXPECT_EQ(m.counts, (std::vector<std::size_t>{2, 1}));
}

TEST(ClassMeans, EmptyClassIsNamed) {
  const auto data = labelled({{1, 1}, {3, 3}}, {0, 2});
  try {
    class_means(data);
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("class 2"), std::string::npos) << e.what();
  }
}

TEST(GaussianSimilarity, TwoClassesAtDistanceDelta) {
  ClassMeans m;
  m.means = MatrixXd::Zero(3, 2);
  m.means(1, 1) = 2.5;
  m.counts = {1, 1};
  const auto s = gaussian_similarity(m);
  EXPECT_NEAR(s(0, 1), std::exp(-0.5), 1e-15);
  EXPECT_EQ(s(0, 1), s(1, 0));
}

TEST(GaussianSimilarity, MatchesDirectFormulaAndIsSymmetric) {
  auto rng = make_rng(3);
  ClassMeans m;
  m.means = gaussian_matrix(4, 5, rng);
  m.counts.assign(5, 1);
  double kappa = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = i + 1; j < 5; ++j) kappa += (m.means.col(i) - m.means.col(j)).norm() / 10.0;
  const auto s = gaussian_similarity(m);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      EXPECT_EQ(s(i, j), s(j, i));
      if (i != j) {
        const double expect = std::exp(-(m.means.col(i) - m.means.col(j)).squaredNorm() / (2 * kappa * kappa));
        EXPECT_NEAR(s(i, j), expect, 1e-14);
      }
      EXPECT_GE(s(i, j), 0.0);
      EXPECT_LE(s(i, j), 1.0);
    }
}

TEST(GaussianSimilarity, CoincidentMeansGiveOnesWithWarning) {
  ClassMeans m;
  m.means = MatrixXd::Ones(3, 4);
  m.counts.assign(4, 2);
  Warnings w;
  const auto s = gaussian_similarity(m, &w);
  EXPECT_FALSE(w.empty());
  EXPECT_TRUE((s.values().array() == 1.0).all());
}

TEST(TagSimilarity, DirectFormula) {
  TagMatrix t(3, 4);
  // Tag 0 on samples {0,1}; tag 1 on {1,2}; tag 2 equals tag 0; tag 3 only on sample 2.
  t(0, 0) = t(1, 0) = 1;
  t(1, 1) = t(2, 1) = 1;
  t(0, 2) = t(1, 2) = 1;
  t(2, 3) = 1;
  const auto s = tag_cooccurrence_similarity(t);
  EXPECT_DOUBLE_EQ(s(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(s(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(s(0, 3), 0.0);
  EXPECT_DOUBLE_EQ(s(1, 3), 2.0 / 3.0);
  TagMatrix empty_col(2, 2);
  empty_col(0, 0) = 1;
  EXPECT_THROW(tag_cooccurrence_similarity(empty_col), std::invalid_argument);
}

TEST(AssignmentObjective, HandEvaluatedInstance) {
  MatrixXd s(3, 3);
  s << 1, 0.9, 0.1,
       0.9, 1, 0.2,
       0.1, 0.2, 1;
  MatrixXd w(2, 3);
  w << 1, 1, -1,
       1, -1, 1;
  // dots: <0,1> = 0, <0,2> = 0, <1,2> = -2.
  // identity: 2 * (0.9 * 1 + 0.1 * 1 + 0.2 * 3) = 3.2
  const SimilarityMatrix sim(s, SimilaritySource::user_supplied);
  const ProxySet p(w, ProxyKind::hclm);
  EXPECT_DOUBLE_EQ(assignment_objective(sim, p, Assignment::identity(3)), 3.2);
  // Classes 0 and 1 (similarity 0.9) must not land on the anti-correlated pair.
  const Assignment best = brute_force_assign(sim, p);
  EXPECT_NEAR(assignment_objective(sim, p, best), brute_force_oracle(s, w), 1e-12);
  const double dot01 = w.col(best[0]).dot(w.col(best[1]));
  EXPECT_GE(dot01, 0.0);
}

TEST(AssignmentObjective, TwoClassSymmetryAndZeroSimilarity) {
  const ProxySet p = random_binary_proxies(2, 6, 1);
  MatrixXd s(2, 2);
  s << 1, 0.4,
       0.4, 1;
  const SimilarityMatrix sim(s, SimilaritySource::user_supplied);
  EXPECT_DOUBLE_EQ(assignment_objective(sim, p, Assignment::identity(2)),
                   assignment_objective(sim, p, Assignment({1, 0})));
  EXPECT_EQ(brute_force_assign(sim, p), Assignment::identity(2));
  const auto g = greedy_assign(sim, p, 1, 0);
  EXPECT_TRUE(g.trace.empty());
  EXPECT_DOUBLE_EQ(g.objective, g.initial_objective);

  const ProxySet p5 = random_binary_proxies(5, 6, 2);
  const SimilarityMatrix zero(MatrixXd::Identity(5, 5), SimilaritySource::user_supplied);
  EXPECT_DOUBLE_EQ(assignment_objective(zero, p5, Assignment({3, 1, 4, 0, 2})), 0.0);
}

TEST(GreedyAssign, MatchesBruteForceOnSmallInstances) {
  int optimal = 0;
  for (int trial = 0; trial < 50; ++trial) {
    auto rng = make_rng(700 + trial);
    const auto sim = random_similarity(6, rng);
    // +-1 proxies scaled to unit norm: same argmin, and 1 - <w_i, w_j> >= 0 keeps ratios meaningful.
    const ProxySet p(random_binary_proxies(6, 8, 900 + trial).weights() / std::sqrt(8.0), ProxyKind::random);
    const auto g = greedy_assign(sim, p, 16, trial);
    const double oracle = brute_force_oracle(sim.values(), p.weights());
    EXPECT_LE(oracle, g.objective + 1e-9);
    EXPECT_NEAR(assignment_objective(sim, p, brute_force_assign(sim, p)), oracle, 1e-9);
    EXPECT_LE(g.objective, 1.1 * oracle + 1e-9);
    if (std::abs(g.objective - oracle) <= 1e-9 * std::max(1.0, std::abs(oracle))) ++optimal;
  }
  EXPECT_GE(optimal, 45);
}

TEST(GreedyAssign, DescentTraceAndDeterminism) {
  auto rng = make_rng(8);
  const auto sim = random_similarity(12, rng);
  const auto p = solve_tammes(12, 8, TammesConfig{}).proxies;
  const auto a = greedy_assign(sim, p, 4, 5);
  const auto b = greedy_assign(sim, p, 4, 5);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_LE(a.objective, a.initial_objective);
  double prev = a.initial_objective;
  for (double v : a.trace) {
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_NEAR(a.objective, assignment_objective(sim, p, a.assignment), 1e-9);
}

TEST(GreedyAssign, ArgminInvariantToProxyScale) {
  for (int trial = 0; trial < 20; ++trial) {
    auto rng = make_rng(40 + trial);
    const auto sim = random_similarity(6, rng);
    const ProxySet p = random_proxies(6, 4, trial);
    const ProxySet p3 = ProxySet::learned(3.0 * p.weights());
    EXPECT_EQ(brute_force_assign(sim, p), brute_force_assign(sim, p3)) << "trial " << trial;
  }
}

TEST(GreedyAssign, EquivariantUnderClassRelabelling) {
  for (int trial = 0; trial < 10; ++trial) {
    auto rng = make_rng(60 + trial);
    const auto sim = random_similarity(6, rng);
    const ProxySet p = random_binary_proxies(6, 8, trial);
    std::vector<int> pi(6);
    std::iota(pi.begin(), pi.end(), 0);
    std::shuffle(pi.begin(), pi.end(), rng);
    MatrixXd permuted(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) permuted(i, j) = sim(pi[i], pi[j]);
    const SimilarityMatrix sim_pi(permuted, SimilaritySource::user_supplied);
    const Assignment a = brute_force_assign(sim, p);
    const Assignment b = brute_force_assign(sim_pi, p);
    // Class i of the relabelled problem is class pi[i] of the original; optimal values agree,
    // and mapping the original optimum through pi attains it.
    std::vector<int> mapped(6);
    for (int i = 0; i < 6; ++i) mapped[i] = a[pi[i]];
    EXPECT_NEAR(assignment_objective(sim_pi, p, b), assignment_objective(sim, p, a), 1e-9);
    EXPECT_NEAR(assignment_objective(sim_pi, p, Assignment(mapped)), assignment_objective(sim, p, a), 1e-9);
  }
}

TEST(BruteForce, GuardsFactorialSize) {
  auto rng = make_rng(1);
  const auto sim = random_similarity(10, rng);
  EXPECT_THROW(brute_force_assign(sim, random_binary_proxies(10, 8, 0)), std::invalid_argument);
}

TEST(SimilarityMatrix, ValidatesRangeAndSymmetry) {
  MatrixXd s = MatrixXd::Ones(2, 2);
  s(0, 1) = 0.5;
  EXPECT_THROW(SimilarityMatrix(s, SimilaritySource::user_supplied), std::invalid_argument);
  s(1, 0) = 1.5;
  s(0, 1) = 1.5;
  EXPECT_THROW(SimilarityMatrix(s, SimilaritySource::user_supplied), std::invalid_argument);
  EXPECT_THROW(Assignment({0, 0, 1}), std::invalid_argument);
}

}  // namespace
