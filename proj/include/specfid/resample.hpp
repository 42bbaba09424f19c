#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "specfid/image.hpp"
#include "specfid/spectrum.hpp"

namespace specfid {

/// Factor-2 up-sampling rules.
///
/// For a signal a of length N, the x2 up-sampled signal carries a_j at even
/// positions 2j and an inserted sample b_j at odd positions 2j+1:
///   bed-of-nails  b_j = 0
///   nearest       b_j = a_j
///   bilinear      b_j = (a_j + a_{j+1}) / 2   (periodic, a_N = a_0)
///
/// Zero insertion leaves the transform of the even samples untouched while
/// halving the frequency step, so the 2N-point spectrum repeats the N-point
/// one: DFT(up)(k) = DFT(a)(k mod N). The nearest rule multiplies that
/// replica by (1 + e^{-i pi k / N}); bilinear by (1 + cos(pi k / N)).
enum class UpsampleMethod { kBedOfNails, kNearest, kBilinear };

std::vector<double> upsample1d(std::span<const double> signal, UpsampleMethod method);

/// Separable x2 up-sampling along both axes. Only factor 2 is supported.
Image upsample2d(const Image& image, UpsampleMethod method, std::size_t factor = 2);
RealGrid upsample2d(const RealGrid& grid, UpsampleMethod method, std::size_t factor = 2);

struct ReplicaReport {
  double max_abs_err = 0.0;
  /// max |DFT(a)|; the error is judged relative to it.
  double max_abs_spectrum = 0.0;
  /// Indices k >= N of the up-sampled spectrum that replicate the base band.
  std::vector<std::size_t> replica_positions;

  double relative_error() const { return max_abs_spectrum > 0.0 ? max_abs_err / max_abs_spectrum : max_abs_err; }
};

/// Compares the direct DFT of the bed-of-nails x2 signal with the replicated
/// base-band DFT of `signal`. Requires N >= 2.
ReplicaReport verify_replica(std::span<const double> signal);

/// 2D analogue over both axes: up(k, l) = I(k mod M, l mod N).
ReplicaReport verify_replica_2d(const RealGrid& grid);

/// Max deviation of the nearest-neighbour x2 spectrum from its closed form.
ReplicaReport verify_nearest_closed_form(std::span<const double> signal);

/// Fraction of spectral power in bins [from, to) of a spectrum.
double band_power_fraction(std::span<const Complex> spectrum, std::size_t from, std::size_t to);

}  // namespace specfid
