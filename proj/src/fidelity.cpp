#include "specfid/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "specfid/errors.hpp"
#include "specfid/rng.hpp"

namespace specfid {

namespace {

std::vector<double> scaled_mean(const std::vector<SpectralProfile>& set, SdScale scale) {
  std::vector<double> mean(set.front().size(), 0.0);
  for (const auto& p : set) {
    if (p.size() != mean.size()) throw UsageError("profile length mismatch");
    for (std::size_t r = 0; r < mean.size(); ++r) mean[r] += scale == SdScale::kLog1p ? std::log1p(p.values[r]) : p.values[r];
  }
  for (double& m : mean) m /= static_cast<double>(set.size());
  return mean;
}

// Indices of a seeded subsample of size m out of n, in ascending order.
std::vector<std::size_t> subsample(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (m < n) {
    rng.shuffle(idx);
    idx.resize(m);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

struct Labeled {
  FeatureMatrix features;
  std::vector<int> labels;
};

void append(Labeled& out, const std::vector<SpectralProfile>& set, const std::vector<std::size_t>& idx, int label) {
  for (auto i : idx) {
    out.features.push_back(set[i].values);
    out.labels.push_back(label);
  }
}

void check_sets(const std::vector<SpectralProfile>& real, const std::vector<SpectralProfile>& generated) {
  if (real.empty() || generated.empty()) throw UsageError("both profile sets must be non-empty");
  if (real.front().size() != generated.front().size()) throw UsageError("profile length mismatch between sets");
}

TrainResult fit(const FeatureMatrix& x, const std::vector<int>& y, const DetectionConfig& c) {
  if (c.model == LinearKind::kLogReg) {
    return train_logreg(x, y, c.epochs > 0 ? c.epochs : kLogRegEpochs, c.lr > 0.0 ? c.lr : kLogRegLr);
  }
  return train_linsvm(x, y, c.epochs > 0 ? c.epochs : kSvmEpochs, c.lr > 0.0 ? c.lr : kSvmLr, c.reg);
}

// Stratified split of one class into (train, test) index lists.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_class(std::size_t n, double split, Rng& rng) {
  if (n < 2) throw UsageError("each class needs at least two samples to split");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  auto n_train = static_cast<std::size_t>(std::floor(split * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return {train, test};
}

}  // namespace

std::string to_string(SdScale scale) { return scale == SdScale::kLog1p ? "log1p" : "raw"; }

SdScale parse_sd_scale(std::string_view text) {
  if (text == "log1p") return SdScale::kLog1p;
  if (text == "raw") return SdScale::kRaw;
  throw UsageError("unknown scale '" + std::string(text) + "' (expected raw or log1p)");
}

double spectral_difference(const std::vector<SpectralProfile>& real, const std::vector<SpectralProfile>& generated,
                           SdScale scale) {
  check_sets(real, generated);
  const auto a = scaled_mean(real, scale);
  const auto b = scaled_mean(generated, scale);
  double sd = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) sd += std::abs(a[r] - b[r]);
  return sd;
}

double cloaking_score(double train_accuracy) {
  if (!(train_accuracy >= 0.0 && train_accuracy <= 1.0)) throw UsageError("accuracy must lie in [0, 1]");
  return std::clamp(1.0 - 2.0 * std::abs(train_accuracy - 0.5), 0.0, 1.0);
}

CsResult evaluate_cs(const std::vector<SpectralProfile>& real, const std::vector<SpectralProfile>& generated,
                     const CsConfig& config) {
  check_sets(real, generated);
  Rng rng(config.seed);
  const std::size_t m = std::min(real.size(), generated.size());
  const auto real_idx = subsample(real.size(), m, rng);
  const auto gen_idx = subsample(generated.size(), m, rng);

  Labeled data;
  append(data, real, real_idx, 0);
  append(data, generated, gen_idx, 1);
  const auto logged = log1p_features(data.features);
  const auto standardized = Standardizer::fit(logged).apply(logged);
  const auto trained = train_logreg(standardized, data.labels, config.epochs, config.lr);
  return {cloaking_score(trained.train_accuracy), trained.train_accuracy, m, m};
}

DetectionResult evaluate_detection(const std::vector<SpectralProfile>& real,
                                   const std::vector<SpectralProfile>& generated, const DetectionConfig& config) {
  check_sets(real, generated);
  if (!(config.split > 0.0 && config.split < 1.0)) throw UsageError("split must lie in (0, 1)");
  Rng rng(config.seed);
  const auto [real_train, real_test] = split_class(real.size(), config.split, rng);
  const auto [gen_train, gen_test] = split_class(generated.size(), config.split, rng);

  Labeled train, test;
  append(train, real, real_train, 0);
  append(train, generated, gen_train, 1);
  append(test, real, real_test, 0);
  append(test, generated, gen_test, 1);

  DetectionResult out;
  out.standardizer = Standardizer::fit(log1p_features(train.features));
  const auto x_train = out.standardizer.apply(log1p_features(train.features));
  const auto x_test = out.standardizer.apply(log1p_features(test.features));
  auto trained = fit(x_train, train.labels, config);
  out.model = trained.model;
  out.train_accuracy = trained.train_accuracy;
  out.test_accuracy = out.model.accuracy(x_test, test.labels);
  out.n_train = x_train.size();
  out.n_test = x_test.size();
  return out;
}

DetectionResult evaluate_transfer(const std::vector<SpectralProfile>& real_a,
                                  const std::vector<SpectralProfile>& generated_a,
                                  const std::vector<SpectralProfile>& real_b,
                                  const std::vector<SpectralProfile>& generated_b, const DetectionConfig& config) {
  check_sets(real_b, generated_b);
  auto out = evaluate_detection(real_a, generated_a, config);
  if (real_b.front().size() != real_a.front().size()) throw UsageError("transfer sets differ in profile length");
  Labeled test;
  std::vector<std::size_t> all_real(real_b.size()), all_gen(generated_b.size());
  std::iota(all_real.begin(), all_real.end(), 0);
  std::iota(all_gen.begin(), all_gen.end(), 0);
  append(test, real_b, all_real, 0);
  append(test, generated_b, all_gen, 1);
  const auto x_test = out.standardizer.apply(log1p_features(test.features));
  out.test_accuracy = out.model.accuracy(x_test, test.labels);
  out.n_test = x_test.size();
  return out;
}

FidelityReport make_report(const std::vector<SpectralProfile>& real, const std::vector<SpectralProfile>& generated,
                           const ReportConfig& config) {
  FidelityReport r;
  r.config = config;
  r.sd = spectral_difference(real, generated, config.sd_scale);
  const auto cs = evaluate_cs(real, generated, config.cs);
  r.cs = cs.cs;
  DetectionConfig det;
  det.split = config.split;
  det.seed = config.seed;
  det.model = LinearKind::kLogReg;
  const auto lr = evaluate_detection(real, generated, det);
  det.model = LinearKind::kLinSvm;
  const auto svm = evaluate_detection(real, generated, det);
  r.lr_train_acc = lr.train_accuracy;
  r.lr_test_acc = lr.test_accuracy;
  r.svm_train_acc = svm.train_accuracy;
  r.svm_test_acc = svm.test_accuracy;
  r.n_real = real.size();
  r.n_generated = generated.size();
  return r;
}

nlohmann::ordered_json to_json(const FidelityReport& report) {
  nlohmann::ordered_json j;
  j["sd"] = report.sd;
  j["cs"] = report.cs;
  j["lr"] = {{"train_acc", report.lr_train_acc}, {"test_acc", report.lr_test_acc}};
  j["svm"] = {{"train_acc", report.svm_train_acc}, {"test_acc", report.svm_test_acc}};
  j["n_real"] = report.n_real;
  j["n_generated"] = report.n_generated;
  j["config"] = {{"sd_scale", to_string(report.config.sd_scale)},
                 {"cs_epochs", report.config.cs.epochs},
                 {"cs_lr", report.config.cs.lr},
                 {"cs_seed", report.config.cs.seed},
                 {"split", report.config.split},
                 {"seed", report.config.seed},
                 {"preprocess", "log1p+zscore"}};
  return j;
}

}  // namespace specfid
