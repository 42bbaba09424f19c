#include "specfid/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "specfid/errors.hpp"

namespace specfid {

std::vector<double> upsample1d(std::span<const double> signal, UpsampleMethod method) {
  const std::size_t n = signal.size();
  std::vector<double> out(2 * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    out[2 * j] = signal[j];
    switch (method) {
      case UpsampleMethod::kBedOfNails: break;
      case UpsampleMethod::kNearest: out[2 * j + 1] = signal[j]; break;
      case UpsampleMethod::kBilinear: out[2 * j + 1] = 0.5 * (signal[j] + signal[(j + 1) % n]); break;
    }
  }
  return out;
}

RealGrid upsample2d(const RealGrid& grid, UpsampleMethod method, std::size_t factor) {
  if (factor != 2) throw UsageError("only factor 2 up-sampling is supported");
  const std::size_t h = grid.height, w = grid.width;
  RealGrid rows{h, 2 * w, std::vector<double>(h * 2 * w)};
  for (std::size_t r = 0; r < h; ++r) {
    const auto up = upsample1d(std::span<const double>(grid.values.data() + r * w, w), method);
    std::copy(up.begin(), up.end(), rows.values.begin() + static_cast<std::ptrdiff_t>(r * 2 * w));
  }
  RealGrid out{2 * h, 2 * w, std::vector<double>(4 * h * w)};
  std::vector<double> column(h);
  for (std::size_t c = 0; c < 2 * w; ++c) {
    for (std::size_t r = 0; r < h; ++r) column[r] = rows(r, c);
    const auto up = upsample1d(column, method);
    for (std::size_t r = 0; r < 2 * h; ++r) out(r, c) = up[r];
  }
  return out;
}

Image upsample2d(const Image& image, UpsampleMethod method, std::size_t factor) {
  auto grid = upsample2d(to_grid(image), method, factor);
  return Image::clamped(grid.height, grid.width, std::move(grid.values));
}

ReplicaReport verify_replica(std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n < 2) throw UsageError("verify_replica needs at least two samples");
  const auto base = dft(signal);
  const auto up = dft(upsample1d(signal, UpsampleMethod::kBedOfNails));

  ReplicaReport report;
  for (const auto& v : base) report.max_abs_spectrum = std::max(report.max_abs_spectrum, std::abs(v));
  for (std::size_t k = 0; k < 2 * n; ++k) {
    report.max_abs_err = std::max(report.max_abs_err, std::abs(up[k] - base[k % n]));
    if (k >= n) report.replica_positions.push_back(k);
  }
  return report;
}

ReplicaReport verify_replica_2d(const RealGrid& grid) {
  if (grid.height < 2 || grid.width < 2) throw UsageError("verify_replica_2d needs at least 2x2");
  const auto base = dft2(grid);
  const auto up = dft2(upsample2d(grid, UpsampleMethod::kBedOfNails));

  ReplicaReport report;
  for (std::size_t i = 0; i < base.re.size(); ++i)
    report.max_abs_spectrum = std::max(report.max_abs_spectrum, std::hypot(base.re[i], base.im[i]));
  for (std::size_t k = 0; k < up.height; ++k) {
    for (std::size_t l = 0; l < up.width; ++l) {
      const Complex expected = base.at(k % grid.height, l % grid.width);
      report.max_abs_err = std::max(report.max_abs_err, std::abs(up.at(k, l) - expected));
      if (k >= grid.height || l >= grid.width) report.replica_positions.push_back(k * up.width + l);
    }
  }
  return report;
}

ReplicaReport verify_nearest_closed_form(std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n < 1) throw UsageError("verify_nearest_closed_form needs a non-empty signal");
  const auto base = dft(signal);
  const auto up = dft(upsample1d(signal, UpsampleMethod::kNearest));

  ReplicaReport report;
  for (const auto& v : base) report.max_abs_spectrum = std::max(report.max_abs_spectrum, std::abs(v));
  for (std::size_t k = 0; k < 2 * n; ++k) {
    const double angle = -std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    const Complex factor = 1.0 + Complex(std::cos(angle), std::sin(angle));
    report.max_abs_err = std::max(report.max_abs_err, std::abs(up[k] - factor * base[k % n]));
    if (k >= n) report.replica_positions.push_back(k);
  }
  return report;
}

double band_power_fraction(std::span<const Complex> spectrum, std::size_t from, std::size_t to) {
  double band = 0.0, total = 0.0;
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const double p = std::norm(spectrum[k]);
    total += p;
    if (k >= from && k < to) band += p;
  }
  return total > 0.0 ? band / total : 0.0;
}

}  // namespace specfid
