#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "specfid/image.hpp"

namespace specfid {

using Complex = std::complex<double>;

/// Dense real matrix, row-major.
struct RealGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const { return values[r * width + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * width + c]; }
};

/// Unnormalized 2D DFT of an image; re/im are row-major with DC at (0,0).
struct Spectrum {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> re;
  std::vector<double> im;

  Complex at(std::size_t k, std::size_t l) const { return {re[k * width + l], im[k * width + l]}; }
};

/// Radially aggregated power, one value per integer radius from DC.
struct SpectralProfile {
  std::vector<double> values;
  /// Side length of the source image (0 when unknown, e.g. read from CSV).
  std::size_t n = 0;

  std::size_t size() const { return values.size(); }
};

// ---- 1D transforms ---------------------------------------------------------

bool is_power_of_two(std::size_t n);

/// Direct O(N^2) forward DFT, e^{-2 pi i jk/N}, no normalization.
std::vector<Complex> dft(std::span<const Complex> signal);
std::vector<Complex> dft(std::span<const double> signal);

/// In-place iterative radix-2 forward FFT. Size must be a power of two.
void fft_inplace(std::vector<Complex>& data);

// ---- 2D transforms ---------------------------------------------------------

/// Forward DFT: radix-2 row-column FFT for power-of-two sides, direct
/// row-column summation otherwise.
Spectrum dft2(const Image& image);
Spectrum dft2(const RealGrid& grid);

/// Row-column direct summation, any size.
Spectrum dft2_direct(const RealGrid& grid);
/// Row-column radix-2 FFT; both sides must be powers of two.
Spectrum dft2_fft(const RealGrid& grid);

/// Inverse of dft2 including the 1/(MN) factor; returns the real part.
RealGrid idft2_real(const Spectrum& spectrum);

RealGrid to_grid(const Image& image);

/// Per-bin |I(k,l)|^2. With `shifted`, DC moves to (floor(M/2), floor(N/2)).
RealGrid power_spectrum(const Spectrum& spectrum, bool shifted);

/// Moves bin (k,l) to ((k + M/2) mod M, (l + N/2) mod N).
RealGrid fft_shift(const RealGrid& grid);

// ---- azimuthal integral ----------------------------------------------------

enum class AzimuthalMode { kBinned, kInterpolated };

/// ceil(n / sqrt 2) + 1: number of radii that cover the corners of an n x n spectrum.
std::size_t profile_length(std::size_t n);

/// Ring of unshifted bin (k,l) in an n x n spectrum: the rounded Euclidean
/// distance of its shifted position from the shifted DC bin.
std::size_t ring_of_bin(std::size_t k, std::size_t l, std::size_t n);

/// Highest ring index that contains at least one bin; may be below
/// profile_length(n) - 1 when the rounded corner radius is under ceil(n / sqrt 2).
std::size_t max_populated_ring(std::size_t n);

/// Azimuthal integral of the power spectrum of a square image.
/// kBinned sums all bins of each ring (exact partition of the power);
/// kInterpolated averages bilinear samples on each circle and scales by 2 pi r.
SpectralProfile azimuthal_integral(const Image& image, AzimuthalMode mode = AzimuthalMode::kBinned);
SpectralProfile azimuthal_integral(const RealGrid& grid, AzimuthalMode mode = AzimuthalMode::kBinned);

/// Per-index sample mean and population standard deviation.
struct ProfileStats {
  SpectralProfile mean;
  SpectralProfile std;
};

ProfileStats profile_stats(std::span<const SpectralProfile> profiles);

}  // namespace specfid
