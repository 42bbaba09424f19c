#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "specfid/spectrum.hpp"

namespace specfid {

using FeatureMatrix = std::vector<std::vector<double>>;

/// Per-feature z-scoring. Standard deviations below 1e-12 are replaced by 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std;

  static Standardizer fit(const FeatureMatrix& features);
  FeatureMatrix apply(const FeatureMatrix& features) const;
  std::vector<double> apply(const std::vector<double>& row) const;
};

/// Element-wise log1p of every profile value.
FeatureMatrix log1p_features(const FeatureMatrix& features);
FeatureMatrix log1p_features(const std::vector<SpectralProfile>& profiles);

enum class LinearKind { kLogReg, kLinSvm };

std::string to_string(LinearKind kind);

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  LinearKind kind = LinearKind::kLogReg;

  double decision(const std::vector<double>& x) const;
  /// Class 1 iff the decision value is >= 0 (probability >= 0.5 for logreg).
  int predict(const std::vector<double>& x) const { return decision(x) >= 0.0 ? 1 : 0; }
  double accuracy(const FeatureMatrix& features, const std::vector<int>& labels) const;
};

struct TrainResult {
  LinearModel model;
  double train_accuracy = 0.0;
  /// Objective before each step, then after the last one (epochs + 1 values).
  std::vector<double> loss_history;
};

/// Mean binary cross-entropy of a logistic model.
double logreg_loss(const LinearModel& model, const FeatureMatrix& features, const std::vector<int>& labels);

/// Full-batch gradient of the mean BCE; returns {d/dw..., d/db}.
std::vector<double> logreg_gradient(const LinearModel& model, const FeatureMatrix& features,
                                    const std::vector<int>& labels);

/// Full-batch gradient descent on mean BCE from zero initialization.
/// Labels are 0/1; both classes must be present.
TrainResult train_logreg(const FeatureMatrix& features, const std::vector<int>& labels, int epochs, double lr);

/// Mean hinge loss with labels mapped to +-1, plus (reg/2)|w|^2.
double svm_objective(const LinearModel& model, const FeatureMatrix& features, const std::vector<int>& labels,
                     double reg);
std::vector<double> svm_subgradient(const LinearModel& model, const FeatureMatrix& features,
                                    const std::vector<int>& labels, double reg);

/// Full-batch subgradient descent on the L2-regularized hinge loss.
TrainResult train_linsvm(const FeatureMatrix& features, const std::vector<int>& labels, int epochs, double lr,
                         double reg);

// ---- k-means ---------------------------------------------------------------

struct KMeansResult {
  FeatureMatrix centroids;
  std::vector<std::size_t> assignments;
  double inertia = 0.0;
  /// Inertia after each assignment step.
  std::vector<double> inertia_history;
  int iterations = 0;
};

/// k-means++ seeding followed by Lloyd iterations until the assignment is a
/// fixpoint or `max_iter` is reached. Throws UsageError when k exceeds the
/// sample count.
KMeansResult kmeans(const FeatureMatrix& points, std::size_t k, std::uint64_t seed, int max_iter = 300);

struct TopFrequencyClusters {
  KMeansResult clusters;
  /// Profile index the clustering used.
  std::size_t feature_index = 0;
  /// Mean full profile of each cluster.
  FeatureMatrix cluster_mean_profiles;
  std::vector<std::size_t> cluster_sizes;
};

/// Index of the highest frequency that carries power: the last entry that is
/// non-zero in at least one profile.
std::size_t top_frequency_index(const FeatureMatrix& profiles);

/// 1D k-means on the highest-frequency entry, then per-cluster mean profiles.
TopFrequencyClusters cluster_by_top_frequency(const FeatureMatrix& profiles, std::size_t k, std::uint64_t seed);

/// Fraction of samples whose cluster agrees with `truth` under the best
/// one-to-one relabeling (k <= 8).
double cluster_purity(const std::vector<std::size_t>& assignments, const std::vector<int>& truth, std::size_t k);

// ---- model artifact --------------------------------------------------------

nlohmann::ordered_json model_to_json(const LinearModel& model, const Standardizer& standardizer);
std::pair<LinearModel, Standardizer> model_from_json(const nlohmann::json& j);

}  // namespace specfid
