#include <gtest/gtest.h>

#include <cmath>

#include "specfid/errors.hpp"
#include "specfid/linmodels.hpp"
#include "test_support.hpp"

using namespace specfid;

namespace {

struct Dataset {
  FeatureMatrix x;
  std::vector<int> y;
};

// Two overlapping Gaussian classes with a random mean offset.
Dataset random_dataset(Rng& rng, std::size_t n, std::size_t dim, double offset) {
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i % 2;
    std::vector<double> row(dim);
    for (std::size_t j = 0; j < dim; ++j) row[j] = rng.normal() + (label ? offset : 0.0) * (j % 2 ? 1.0 : -0.5);
    d.x.push_back(std::move(row));
    d.y.push_back(label);
  }
  return d;
}

double column_mean(const FeatureMatrix& m, std::size_t j) {
  double s = 0.0;
  for (const auto& r : m) s += r[j];
  return s / static_cast<double>(m.size());
}

double column_std(const FeatureMatrix& m, std::size_t j) {
  const double mu = column_mean(m, j);
  double s = 0.0;
  for (const auto& r : m) s += (r[j] - mu) * (r[j] - mu);
  return std::sqrt(s / static_cast<double>(m.size()));
}

}  // namespace

TEST(Standardizer, ConstantColumnBecomesZero) {
  const FeatureMatrix m{{1.0, 5.0}, {2.0, 5.0}, {3.0, 5.0}};
  const auto s = Standardizer::fit(m);
  EXPECT_EQ(s.std[1], 1.0);
  for (const auto& r : s.apply(m)) EXPECT_EQ(r[1], 0.0);
}

TEST(Standardizer, RandomMatrixColumnsStandardized) {
  Rng rng(1);
  FeatureMatrix m(100, std::vector<double>(10));
  for (auto& r : m)
    for (double& v : r) v = rng.uniform(-50.0, 300.0);
  const auto z = Standardizer::fit(m).apply(m);
  for (std::size_t j = 0; j < 10; ++j) {
    EXPECT_LE(std::abs(column_mean(z, j)), 1e-10);
    EXPECT_NEAR(column_std(z, j), 1.0, 1e-10);
  }
  // Already standardized data is a fixed point.
  const auto zz = Standardizer::fit(z).apply(z);
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = 0; j < 10; ++j) EXPECT_NEAR(zz[i][j], z[i][j], 1e-12);
}

TEST(Standardizer, RaggedInputRejected) {
  EXPECT_THROW(Standardizer::fit({{1.0, 2.0}, {1.0}}), DataError);
  EXPECT_THROW(Standardizer::fit({}), UsageError);
}

TEST(LogReg, SeparableOneDimensional) {
  FeatureMatrix x;
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) {
    x.push_back({static_cast<double>(i % 2)});
    y.push_back(i % 2);
  }
  EXPECT_EQ(train_logreg(x, y, 200, 0.1).train_accuracy, 1.0);
}

TEST(LogReg, IdenticalClassesGiveChance) {
  Rng rng(2);
  FeatureMatrix base(100, std::vector<double>(4));
  for (auto& r : base)
    for (double& v : r) v = rng.normal();
  FeatureMatrix x = base;
  x.insert(x.end(), base.begin(), base.end());
  std::vector<int> y(100, 0);
  y.insert(y.end(), 100, 1);
  const auto res = train_logreg(x, y, 1000, 0.1);
  EXPECT_EQ(res.train_accuracy, 0.5);
}

TEST(LogReg, GradientAtZeroMatchesFormula) {
  Rng rng(3);
  const auto d = random_dataset(rng, 30, 5, 1.0);
  LinearModel zero{std::vector<double>(5, 0.0), 0.0, LinearKind::kLogReg};
  const auto g = logreg_gradient(zero, d.x, d.y);
  for (std::size_t j = 0; j < 5; ++j) {
    double expected = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i) expected += (0.5 - d.y[i]) * d.x[i][j];
    EXPECT_NEAR(g[j], expected / 30.0, 1e-14);
  }
  double bias = 0.0;
  for (int label : d.y) bias += 0.5 - label;
  EXPECT_NEAR(g[5], bias / 30.0, 1e-14);
}

TEST(LogReg, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  const auto d = random_dataset(rng, 25, 3, 0.8);
  LinearModel m{{0.3, -0.2, 0.5}, 0.1, LinearKind::kLogReg};
  const auto g = logreg_gradient(m, d.x, d.y);
  constexpr double h = 1e-6;
  for (std::size_t j = 0; j <= 3; ++j) {
    auto plus = m, minus = m;
    (j < 3 ? plus.weights[j] : plus.bias) += h;
    (j < 3 ? minus.weights[j] : minus.bias) -= h;
    const double numeric = (logreg_loss(plus, d.x, d.y) - logreg_loss(minus, d.x, d.y)) / (2 * h);
    EXPECT_NEAR(g[j], numeric, 1e-7);
  }
}

TEST(LogReg, LossNonIncreasingOnStandardizedData) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto d = random_dataset(rng, 40 + rng.below(40), 1 + rng.below(6), rng.uniform(0.0, 3.0));
    const auto z = Standardizer::fit(d.x).apply(d.x);
    const double lr = rng.uniform(0.01, 0.5);
    const auto res = train_logreg(z, d.y, 200, lr);
    ASSERT_EQ(res.loss_history.size(), 201u);
    for (std::size_t e = 1; e < res.loss_history.size(); ++e) {
      ASSERT_LE(res.loss_history[e], res.loss_history[e - 1] + 1e-12) << "trial " << trial << " epoch " << e;
    }
  }
}

TEST(LogReg, LabelSwapNegatesWeights) {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const auto d = random_dataset(rng, 60, 4, 1.0);
    const auto z = Standardizer::fit(d.x).apply(d.x);
    auto swapped = d.y;
    for (int& v : swapped) v = 1 - v;
    const auto a = train_logreg(z, d.y, 500, 0.1);
    const auto b = train_logreg(z, swapped, 500, 0.1);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(a.model.weights[j], -b.model.weights[j], 1e-8);
    EXPECT_NEAR(a.model.bias, -b.model.bias, 1e-8);
    EXPECT_EQ(a.train_accuracy, b.train_accuracy);
  }
}

TEST(LogReg, ScalingFeaturesDoesNotChangeDecisions) {
  Rng rng(7);
  const auto d = random_dataset(rng, 80, 3, 1.2);
  FeatureMatrix scaled = d.x;
  for (auto& r : scaled)
    for (double& v : r) v *= 37.5;
  const auto s1 = Standardizer::fit(d.x);
  const auto s2 = Standardizer::fit(scaled);
  const auto m1 = train_logreg(s1.apply(d.x), d.y, 300, 0.1).model;
  const auto m2 = train_logreg(s2.apply(scaled), d.y, 300, 0.1).model;
  for (std::size_t i = 0; i < d.x.size(); ++i) EXPECT_EQ(m1.predict(s1.apply(d.x[i])), m2.predict(s2.apply(scaled[i])));
}

TEST(LogReg, SingleClassRejected) {
  EXPECT_THROW(train_logreg({{1.0}, {2.0}}, {1, 1}, 10, 0.1), UsageError);
  EXPECT_THROW(train_linsvm({{1.0}, {2.0}}, {0, 0}, 10, 0.1, 1e-3), UsageError);
}

TEST(LinSvm, TwoPointSet) {
  const auto res = train_linsvm({{-1.0}, {1.0}}, {0, 1}, 2000, 0.01, 1e-3);
  EXPECT_EQ(res.train_accuracy, 1.0);
}

TEST(LinSvm, LabelSwapFlipsWeights) {
  Rng rng(8);
  const auto d = random_dataset(rng, 50, 3, 2.0);
  auto swapped = d.y;
  for (int& v : swapped) v = 1 - v;
  const auto a = train_linsvm(d.x, d.y, 500, 0.01, 1e-3);
  const auto b = train_linsvm(d.x, swapped, 500, 0.01, 1e-3);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.model.weights[j], -b.model.weights[j], 1e-10);
  EXPECT_EQ(a.train_accuracy, b.train_accuracy);
}

TEST(LinSvm, SubgradientMatchesFiniteDifferencesAwayFromKinks) {
  Rng rng(9);
  const auto d = random_dataset(rng, 20, 3, 1.0);
  LinearModel m{{0.4, -0.3, 0.2}, 0.05, LinearKind::kLinSvm};
  const double reg = 1e-3;
  const auto g = svm_subgradient(m, d.x, d.y, reg);
  // Probe only if no margin sits within the step of the hinge.
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    const double margin = (d.y[i] ? 1.0 : -1.0) * m.decision(d.x[i]);
    ASSERT_GT(std::abs(margin - 1.0), 1e-3);
  }
  constexpr double h = 1e-7;
  for (std::size_t j = 0; j <= 3; ++j) {
    auto plus = m, minus = m;
    (j < 3 ? plus.weights[j] : plus.bias) += h;
    (j < 3 ? minus.weights[j] : minus.bias) -= h;
    const double numeric = (svm_objective(plus, d.x, d.y, reg) - svm_objective(minus, d.x, d.y, reg)) / (2 * h);
    EXPECT_LT(testsupport::rel_err(g[j], numeric), 1e-5);
  }
}

TEST(KMeans, RepeatedPoints) {
  const FeatureMatrix pts{{1.0, 2.0}, {1.0, 2.0}, {5.0, 5.0}, {5.0, 5.0}};
  const auto r = kmeans(pts, 2, 1);
  EXPECT_EQ(r.inertia, 0.0);
  EXPECT_EQ(r.assignments[0], r.assignments[1]);
  EXPECT_EQ(r.assignments[2], r.assignments[3]);
  EXPECT_NE(r.assignments[0], r.assignments[2]);
  EXPECT_EQ(r.centroids[r.assignments[0]], (std::vector<double>{1.0, 2.0}));
}

TEST(KMeans, SingleClusterIsMean) {
  Rng rng(10);
  FeatureMatrix pts(50, std::vector<double>(3));
  for (auto& p : pts)
    for (double& v : p) v = rng.normal();
  const auto r = kmeans(pts, 1, 0);
  double total = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    const double mu = column_mean(pts, j);
    EXPECT_NEAR(r.centroids[0][j], mu, 1e-12);
    const double sd = column_std(pts, j);
    total += sd * sd * 50.0;
  }
  EXPECT_NEAR(r.inertia, total, 1e-9);
}

TEST(KMeans, SeparatedBlobsArePure) {
  Rng rng(11);
  FeatureMatrix pts;
  std::vector<int> truth;
  for (int i = 0; i < 100; ++i) {
    const int c = i % 2;
    pts.push_back({rng.normal() + 10.0 * c, rng.normal()});
    truth.push_back(c);
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = kmeans(pts, 2, seed);
    EXPECT_EQ(cluster_purity(r.assignments, truth, 2), 1.0);
  }
}

TEST(KMeans, InertiaMonotoneAndConsistent) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureMatrix pts(60, std::vector<double>(2));
    for (auto& p : pts)
      for (double& v : p) v = rng.uniform(0.0, 10.0);
    const std::size_t k = 2 + rng.below(4);
    const auto r = kmeans(pts, k, rng.next_u64());
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
      ASSERT_LE(r.inertia_history[i], r.inertia_history[i - 1] + 1e-12);
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      ASSERT_LT(r.assignments[i], k);
      for (std::size_t j = 0; j < 2; ++j) {
        const double d = pts[i][j] - r.centroids[r.assignments[i]][j];
        inertia += d * d;
      }
    }
    EXPECT_NEAR(r.inertia, inertia, 1e-9 * (1.0 + inertia));
  }
}

TEST(KMeans, TooManyClusters) { EXPECT_THROW(kmeans({{1.0}}, 2, 0), UsageError); }

TEST(TopFrequency, UsesLastNonZeroEntry) {
  const FeatureMatrix profiles{{9.0, 1.0, 0.1, 0.0}, {9.0, 1.0, 5.0, 0.0}, {9.0, 1.0, 0.2, 0.0}, {9.0, 1.0, 5.5, 0.0}};
  EXPECT_EQ(top_frequency_index(profiles), 2u);
  const auto c = cluster_by_top_frequency(profiles, 2, 3);
  EXPECT_EQ(c.feature_index, 2u);
  EXPECT_EQ(c.clusters.assignments, (std::vector<std::size_t>{0, 1, 0, 1}));
  EXPECT_NEAR(c.cluster_mean_profiles[0][2], 0.15, 1e-12);
  EXPECT_NEAR(c.cluster_mean_profiles[1][2], 5.25, 1e-12);
  EXPECT_EQ(c.cluster_sizes, (std::vector<std::size_t>{2, 2}));
}

TEST(TopFrequency, MirrorsKMeansOnOneFeature) {
  const FeatureMatrix repeated{{0.0, 3.0}, {0.0, 3.0}, {0.0, 7.0}, {0.0, 7.0}};
  const auto r = cluster_by_top_frequency(repeated, 2, 0);
  EXPECT_EQ(r.clusters.inertia, 0.0);
  const auto single = cluster_by_top_frequency(repeated, 1, 0);
  EXPECT_NEAR(single.clusters.centroids[0][0], 5.0, 1e-12);
  EXPECT_NEAR(single.clusters.inertia, 16.0, 1e-12);
}

TEST(Purity, BestRelabeling) {
  EXPECT_EQ(cluster_purity({1, 1, 0, 0}, {0, 0, 1, 1}, 2), 1.0);
  EXPECT_EQ(cluster_purity({0, 1, 0, 1}, {0, 0, 1, 1}, 2), 0.5);
}

TEST(ModelJson, RoundTrip) {
  const LinearModel m{{0.25, -1.5}, 0.125, LinearKind::kLinSvm};
  const Standardizer s{{1.0, 2.0}, {0.5, 3.0}};
  const auto j = model_to_json(m, s);
  EXPECT_EQ(j["kind"], "linsvm");
  EXPECT_EQ(j["preprocess"], "log1p+zscore");
  const auto [m2, s2] = model_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(m2.weights, m.weights);
  EXPECT_EQ(m2.bias, m.bias);
  EXPECT_EQ(m2.kind, m.kind);
  EXPECT_EQ(s2.mean, s.mean);
  EXPECT_EQ(s2.std, s.std);
  EXPECT_THROW(model_from_json(nlohmann::json::parse("{\"kind\": \"tree\"}")), DataError);
}
