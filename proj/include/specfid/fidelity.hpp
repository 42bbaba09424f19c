#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "specfid/linmodels.hpp"
#include "specfid/spectrum.hpp"

namespace specfid {

enum class SdScale { kRaw, kLog1p };

std::string to_string(SdScale scale);
SdScale parse_sd_scale(std::string_view text);

/// L1 distance between the mean profiles of two sets, on log1p-scaled values
/// by default.
double spectral_difference(const std::vector<SpectralProfile>& real, const std::vector<SpectralProfile>& generated,
                           SdScale scale = SdScale::kLog1p);

/// 1 - 2 |accuracy - 0.5|. Throws UsageError for accuracies outside [0, 1].
double cloaking_score(double train_accuracy);

struct CsConfig {
  int epochs = 1000;
  double lr = 0.1;
  std::uint64_t seed = 0;
};

struct CsResult {
  double cs = 0.0;
  double train_accuracy = 0.0;
  std::size_t n_real = 0;
  std::size_t n_generated = 0;
};

/// Draws min(|real|, |generated|) profiles from each side, applies log1p and
/// z-scoring, trains a logistic regression and maps its training accuracy
/// through the cloaking score.
CsResult evaluate_cs(const std::vector<SpectralProfile>& real, const std::vector<SpectralProfile>& generated,
                     const CsConfig& config = {});

struct DetectionConfig {
  LinearKind model = LinearKind::kLogReg;
  /// Fraction of each class used for training.
  double split = 0.5;
  std::uint64_t seed = 0;
  /// Non-positive values select the per-model defaults below.
  int epochs = 0;
  double lr = 0.0;
  double reg = 1e-3;
};

inline constexpr int kLogRegEpochs = 1000;
inline constexpr double kLogRegLr = 0.1;
inline constexpr int kSvmEpochs = 2000;
inline constexpr double kSvmLr = 0.01;

struct DetectionResult {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  LinearModel model;
  Standardizer standardizer;
};

/// Stratified shuffled split, fit on the training fold, report both accuracies.
DetectionResult evaluate_detection(const std::vector<SpectralProfile>& real,
                                   const std::vector<SpectralProfile>& generated, const DetectionConfig& config);

/// Trains on the training fold of pair A and tests on every sample of pair B.
DetectionResult evaluate_transfer(const std::vector<SpectralProfile>& real_a,
                                  const std::vector<SpectralProfile>& generated_a,
                                  const std::vector<SpectralProfile>& real_b,
                                  const std::vector<SpectralProfile>& generated_b, const DetectionConfig& config);

struct ReportConfig {
  SdScale sd_scale = SdScale::kLog1p;
  CsConfig cs;
  double split = 0.5;
  std::uint64_t seed = 0;
};

struct FidelityReport {
  double sd = 0.0;
  double cs = 0.0;
  double lr_train_acc = 0.0;
  double lr_test_acc = 0.0;
  double svm_train_acc = 0.0;
  double svm_test_acc = 0.0;
  std::size_t n_real = 0;
  std::size_t n_generated = 0;
  ReportConfig config;
};

FidelityReport make_report(const std::vector<SpectralProfile>& real, const std::vector<SpectralProfile>& generated,
                           const ReportConfig& config);

nlohmann::ordered_json to_json(const FidelityReport& report);

}  // namespace specfid
