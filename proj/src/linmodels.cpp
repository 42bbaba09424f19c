#include "specfid/linmodels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "specfid/errors.hpp"
#include "specfid/rng.hpp"

namespace specfid {

namespace {

constexpr double kStdFloor = 1e-12;

std::size_t check_rectangular(const FeatureMatrix& features) {
  if (features.empty()) throw UsageError("feature matrix is empty");
  const std::size_t dim = features.front().size();
  if (dim == 0) throw UsageError("feature dimension must be positive");
  for (const auto& row : features) {
    if (row.size() != dim) throw DataError("ragged feature matrix");
  }
  return dim;
}

void check_labels(const FeatureMatrix& features, const std::vector<int>& labels) {
  check_rectangular(features);
  if (labels.size() != features.size()) throw UsageError("label count does not match sample count");
  bool has0 = false, has1 = false;
  for (int y : labels) {
    if (y == 0) {
      has0 = true;
    } else if (y == 1) {
      has1 = true;
    } else {
      throw UsageError("labels must be 0 or 1");
    }
  }
  if (!has0 || !has1) throw UsageError("training data contains a single class");
}

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

void check_finite(const LinearModel& model) {
  if (!std::isfinite(model.bias) ||
      !std::all_of(model.weights.begin(), model.weights.end(), [](double w) { return std::isfinite(w); })) {
    throw NumericError("linear model parameters became non-finite");
  }
}

}  // namespace

// ---- standardization -------------------------------------------------------

Standardizer Standardizer::fit(const FeatureMatrix& features) {
  const std::size_t dim = check_rectangular(features);
  const double n = static_cast<double>(features.size());
  Standardizer s{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  for (const auto& row : features)
    for (std::size_t j = 0; j < dim; ++j) s.mean[j] += row[j];
  for (double& m : s.mean) m /= n;
  for (const auto& row : features)
    for (std::size_t j = 0; j < dim; ++j) s.std[j] += (row[j] - s.mean[j]) * (row[j] - s.mean[j]);
  for (double& v : s.std) {
    v = std::sqrt(v / n);
    if (!(v >= kStdFloor)) v = 1.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(const std::vector<double>& row) const {
  if (row.size() != mean.size()) throw DataError("feature dimension does not match the standardizer");
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / std[j];
  return out;
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& features) const {
  FeatureMatrix out;
  out.reserve(features.size());
  for (const auto& row : features) out.push_back(apply(row));
  return out;
}

FeatureMatrix log1p_features(const FeatureMatrix& features) {
  FeatureMatrix out = features;
  for (auto& row : out)
    for (double& v : row) {
      if (v < 0.0) throw DataError("log1p preprocessing expects non-negative features");
      v = std::log1p(v);
    }
  return out;
}

FeatureMatrix log1p_features(const std::vector<SpectralProfile>& profiles) {
  FeatureMatrix m;
  m.reserve(profiles.size());
  for (const auto& p : profiles) m.push_back(p.values);
  return log1p_features(m);
}

// ---- linear models ---------------------------------------------------------

std::string to_string(LinearKind kind) { return kind == LinearKind::kLogReg ? "logreg" : "linsvm"; }

double LinearModel::decision(const std::vector<double>& x) const {
  if (x.size() != weights.size()) throw DataError("feature dimension does not match the model");
  double z = bias;
  for (std::size_t j = 0; j < x.size(); ++j) z += weights[j] * x[j];
  return z;
}

double LinearModel::accuracy(const FeatureMatrix& features, const std::vector<int>& labels) const {
  if (features.empty()) throw UsageError("accuracy of an empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < features.size(); ++i) correct += predict(features[i]) == labels[i];
  return static_cast<double>(correct) / static_cast<double>(features.size());
}

double logreg_loss(const LinearModel& model, const FeatureMatrix& features, const std::vector<int>& labels) {
  double acc = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double z = model.decision(features[i]);
    acc += softplus(z) - labels[i] * z;
  }
  return acc / static_cast<double>(features.size());
}

std::vector<double> logreg_gradient(const LinearModel& model, const FeatureMatrix& features,
                                    const std::vector<int>& labels) {
  const std::size_t dim = model.weights.size();
  std::vector<double> grad(dim + 1, 0.0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double residual = sigmoid(model.decision(features[i])) - labels[i];
    for (std::size_t j = 0; j < dim; ++j) grad[j] += residual * features[i][j];
    grad[dim] += residual;
  }
  for (double& g : grad) g /= static_cast<double>(features.size());
  return grad;
}

TrainResult train_logreg(const FeatureMatrix& features, const std::vector<int>& labels, int epochs, double lr) {
  check_labels(features, labels);
  if (epochs < 0) throw UsageError("epochs must be non-negative");
  if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
  const std::size_t dim = features.front().size();

  TrainResult result;
  result.model = {std::vector<double>(dim, 0.0), 0.0, LinearKind::kLogReg};
  auto& m = result.model;
  result.loss_history.reserve(static_cast<std::size_t>(epochs) + 1);
  for (int e = 0; e < epochs; ++e) {
    result.loss_history.push_back(logreg_loss(m, features, labels));
    const auto grad = logreg_gradient(m, features, labels);
    for (std::size_t j = 0; j < dim; ++j) m.weights[j] -= lr * grad[j];
    m.bias -= lr * grad[dim];
  }
  check_finite(m);
  result.loss_history.push_back(logreg_loss(m, features, labels));
  result.train_accuracy = m.accuracy(features, labels);
  return result;
}

double svm_objective(const LinearModel& model, const FeatureMatrix& features, const std::vector<int>& labels,
                     double reg) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double s = labels[i] == 1 ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - s * model.decision(features[i]));
  }
  double norm2 = 0.0;
  for (double w : model.weights) norm2 += w * w;
  return hinge / static_cast<double>(features.size()) + 0.5 * reg * norm2;
}

std::vector<double> svm_subgradient(const LinearModel& model, const FeatureMatrix& features,
                                    const std::vector<int>& labels, double reg) {
  const std::size_t dim = model.weights.size();
  std::vector<double> grad(dim + 1, 0.0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double s = labels[i] == 1 ? 1.0 : -1.0;
    if (s * model.decision(features[i]) < 1.0) {
      for (std::size_t j = 0; j < dim; ++j) grad[j] -= s * features[i][j];
      grad[dim] -= s;
    }
  }
  for (double& g : grad) g /= static_cast<double>(features.size());
  for (std::size_t j = 0; j < dim; ++j) grad[j] += reg * model.weights[j];
  return grad;
}

TrainResult train_linsvm(const FeatureMatrix& features, const std::vector<int>& labels, int epochs, double lr,
                         double reg) {
  check_labels(features, labels);
  if (epochs < 0) throw UsageError("epochs must be non-negative");
  if (!(lr > 0.0) || reg < 0.0) throw UsageError("invalid SVM learning rate or regularization");
  const std::size_t dim = features.front().size();

  TrainResult result;
  result.model = {std::vector<double>(dim, 0.0), 0.0, LinearKind::kLinSvm};
  auto& m = result.model;
  for (int e = 0; e < epochs; ++e) {
    result.loss_history.push_back(svm_objective(m, features, labels, reg));
    const auto grad = svm_subgradient(m, features, labels, reg);
    for (std::size_t j = 0; j < dim; ++j) m.weights[j] -= lr * grad[j];
    m.bias -= lr * grad[dim];
  }
  check_finite(m);
  result.loss_history.push_back(svm_objective(m, features, labels, reg));
  result.train_accuracy = m.accuracy(features, labels);
  return result;
}

// ---- k-means ---------------------------------------------------------------

namespace {

double assign(const FeatureMatrix& points, const FeatureMatrix& centroids, std::vector<std::size_t>& assignments) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(points[i], centroids[c]);
      if (d < best) {
        best = d;
        best_c = c;
      }
    }
    assignments[i] = best_c;
    inertia += best;
  }
  return inertia;
}

FeatureMatrix kmeanspp_seed(const FeatureMatrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::size_t> chosen{static_cast<std::size_t>(rng.below(n))};
  std::vector<double> mindist(n, std::numeric_limits<double>::infinity());
  while (chosen.size() < k) {
    const auto& last = points[chosen.back()];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mindist[i] = std::min(mindist[i], squared_distance(points[i], last));
      total += mindist[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (mindist[i] <= 0.0) continue;
        pick = i;
        target -= mindist[i];
        if (target < 0.0) break;
      }
    } else {
      // All remaining points coincide with a chosen centre.
      for (std::size_t i = 0; i < n && pick == n; ++i)
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) pick = i;
    }
    chosen.push_back(pick);
  }
  FeatureMatrix centroids;
  for (auto idx : chosen) centroids.push_back(points[idx]);
  return centroids;
}

}  // namespace

KMeansResult kmeans(const FeatureMatrix& points, std::size_t k, std::uint64_t seed, int max_iter) {
  const std::size_t dim = check_rectangular(points);
  if (k == 0) throw UsageError("k must be positive");
  if (k > points.size()) throw UsageError("k exceeds the number of samples");

  Rng rng(seed);
  KMeansResult result;
  result.centroids = kmeanspp_seed(points, k, rng);
  result.assignments.assign(points.size(), 0);
  result.inertia = assign(points, result.centroids, result.assignments);
  result.inertia_history.push_back(result.inertia);

  for (int it = 0; it < max_iter; ++it) {
    FeatureMatrix sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& s = sums[result.assignments[i]];
      for (std::size_t j = 0; j < dim; ++j) s[j] += points[i][j];
      ++counts[result.assignments[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centre
      for (std::size_t j = 0; j < dim; ++j) result.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
    auto next = result.assignments;
    result.inertia = assign(points, result.centroids, next);
    result.inertia_history.push_back(result.inertia);
    result.iterations = it + 1;
    if (next == result.assignments) break;
    result.assignments = std::move(next);
  }
  return result;
}

std::size_t top_frequency_index(const FeatureMatrix& profiles) {
  const std::size_t dim = check_rectangular(profiles);
  for (std::size_t j = dim; j-- > 0;) {
    for (const auto& p : profiles)
      if (p[j] != 0.0) return j;
  }
  return dim - 1;
}

TopFrequencyClusters cluster_by_top_frequency(const FeatureMatrix& profiles, std::size_t k, std::uint64_t seed) {
  TopFrequencyClusters out;
  out.feature_index = top_frequency_index(profiles);
  FeatureMatrix column;
  column.reserve(profiles.size());
  for (const auto& p : profiles) column.push_back({p[out.feature_index]});
  auto km = kmeans(column, k, seed);

  // Relabel so that cluster 0 has the weakest top frequency.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return km.centroids[a][0] < km.centroids[b][0]; });
  std::vector<std::size_t> rank(k);
  for (std::size_t r = 0; r < k; ++r) rank[order[r]] = r;
  FeatureMatrix sorted_centroids(k);
  for (std::size_t c = 0; c < k; ++c) sorted_centroids[rank[c]] = km.centroids[c];
  km.centroids = std::move(sorted_centroids);
  for (auto& a : km.assignments) a = rank[a];

  const std::size_t dim = profiles.front().size();
  out.cluster_mean_profiles.assign(k, std::vector<double>(dim, 0.0));
  out.cluster_sizes.assign(k, 0);
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    auto& m = out.cluster_mean_profiles[km.assignments[i]];
    for (std::size_t j = 0; j < dim; ++j) m[j] += profiles[i][j];
    ++out.cluster_sizes[km.assignments[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (out.cluster_sizes[c] == 0) continue;
    for (double& v : out.cluster_mean_profiles[c]) v /= static_cast<double>(out.cluster_sizes[c]);
  }
  out.clusters = std::move(km);
  return out;
}

double cluster_purity(const std::vector<std::size_t>& assignments, const std::vector<int>& truth, std::size_t k) {
  if (assignments.size() != truth.size() || assignments.empty()) throw UsageError("purity needs matching, non-empty inputs");
  if (k == 0 || k > 8) throw UsageError("purity supports 1 <= k <= 8");
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t agree = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
      agree += truth[i] >= 0 && perm[assignments[i]] == static_cast<std::size_t>(truth[i]);
    best = std::max(best, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(truth.size());
}

// ---- JSON ------------------------------------------------------------------

nlohmann::ordered_json model_to_json(const LinearModel& model, const Standardizer& standardizer) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(model.kind);
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["standardizer"] = {{"mean", standardizer.mean}, {"std", standardizer.std}};
  j["preprocess"] = "log1p+zscore";
  return j;
}

std::pair<LinearModel, Standardizer> model_from_json(const nlohmann::json& j) {
  try {
    LinearModel m;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "logreg") {
      m.kind = LinearKind::kLogReg;
    } else if (kind == "linsvm") {
      m.kind = LinearKind::kLinSvm;
    } else {
      throw DataError("unknown model kind '" + kind + "'");
    }
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    Standardizer s{j.at("standardizer").at("mean").get<std::vector<double>>(),
                   j.at("standardizer").at("std").get<std::vector<double>>()};
    if (s.mean.size() != m.weights.size() || s.std.size() != m.weights.size()) {
      throw DataError("model and standardizer dimensions differ");
    }
    return {m, s};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  }
}

}  // namespace specfid
