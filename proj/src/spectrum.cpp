#include "specfid/spectrum.hpp"

#include <cmath>
#include <numbers>

#include "specfid/errors.hpp"

namespace specfid {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Applies `transform` to every row, then every column, of a complex grid.
template <typename Transform>
void row_column(std::vector<Complex>& data, std::size_t height, std::size_t width, Transform&& transform) {
  std::vector<Complex> line(width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) line[c] = data[r * width + c];
    transform(line);
    for (std::size_t c = 0; c < width; ++c) data[r * width + c] = line[c];
  }
  line.resize(height);
  for (std::size_t c = 0; c < width; ++c) {
    for (std::size_t r = 0; r < height; ++r) line[r] = data[r * width + c];
    transform(line);
    for (std::size_t r = 0; r < height; ++r) data[r * width + c] = line[r];
  }
}

Spectrum to_spectrum(const std::vector<Complex>& data, std::size_t height, std::size_t width) {
  Spectrum s{height, width, std::vector<double>(data.size()), std::vector<double>(data.size())};
  for (std::size_t i = 0; i < data.size(); ++i) {
    s.re[i] = data[i].real();
    s.im[i] = data[i].imag();
  }
  return s;
}

std::vector<Complex> to_complex(const RealGrid& grid) {
  if (grid.height == 0 || grid.width == 0 || grid.values.size() != grid.height * grid.width) {
    throw UsageError("grid dimensions are inconsistent");
  }
  return {grid.values.begin(), grid.values.end()};
}

// Signed frequency of shifted index for a side of length n.
double centered(std::size_t k, std::size_t n) {
  const std::size_t shifted = (k + n / 2) % n;
  return static_cast<double>(shifted) - static_cast<double>(n / 2);
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<Complex> dft(std::span<const Complex> signal) {
  const std::size_t n = signal.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      // Reduce jk mod n before scaling so the angle stays in [0, 2 pi).
      const double angle = -kTwoPi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      acc += signal[j] * Complex(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

std::vector<Complex> dft(std::span<const double> signal) {
  std::vector<Complex> c(signal.begin(), signal.end());
  return dft(std::span<const Complex>(c));
}

void fft_inplace(std::vector<Complex>& data) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) throw UsageError("fft_inplace requires a power-of-two length");
  if (n == 1) return;

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  std::vector<Complex> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    twiddle[k] = {std::cos(angle), std::sin(angle)};
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const Complex u = data[start + k];
        const Complex v = data[start + k + len / 2] * twiddle[k * stride];
        data[start + k] = u + v;
        data[start + k + len / 2] = u - v;
      }
    }
  }
}

RealGrid to_grid(const Image& image) {
  return {image.height(), image.width(), {image.pixels().begin(), image.pixels().end()}};
}

Spectrum dft2_direct(const RealGrid& grid) {
  auto data = to_complex(grid);
  row_column(data, grid.height, grid.width, [](std::vector<Complex>& line) { line = dft(std::span<const Complex>(line)); });
  return to_spectrum(data, grid.height, grid.width);
}

Spectrum dft2_fft(const RealGrid& grid) {
  if (!is_power_of_two(grid.height) || !is_power_of_two(grid.width)) {
    throw UsageError("dft2_fft requires power-of-two sides");
  }
  auto data = to_complex(grid);
  row_column(data, grid.height, grid.width, [](std::vector<Complex>& line) { fft_inplace(line); });
  return to_spectrum(data, grid.height, grid.width);
}

Spectrum dft2(const RealGrid& grid) {
  if (is_power_of_two(grid.height) && is_power_of_two(grid.width)) return dft2_fft(grid);
  return dft2_direct(grid);
}

Spectrum dft2(const Image& image) { return dft2(to_grid(image)); }

RealGrid idft2_real(const Spectrum& spectrum) {
  // Inverse via conjugation: idft(x) = conj(dft(conj(x))) / (MN).
  std::vector<Complex> data(spectrum.re.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = {spectrum.re[i], -spectrum.im[i]};
  const bool pow2 = is_power_of_two(spectrum.height) && is_power_of_two(spectrum.width);
  row_column(data, spectrum.height, spectrum.width, [pow2](std::vector<Complex>& line) {
    if (pow2) {
      fft_inplace(line);
    } else {
      line = dft(std::span<const Complex>(line));
    }
  });
  const double scale = 1.0 / static_cast<double>(data.size());
  RealGrid out{spectrum.height, spectrum.width, std::vector<double>(data.size())};
  for (std::size_t i = 0; i < data.size(); ++i) out.values[i] = data[i].real() * scale;
  return out;
}

RealGrid fft_shift(const RealGrid& grid) {
  RealGrid out{grid.height, grid.width, std::vector<double>(grid.values.size())};
  for (std::size_t k = 0; k < grid.height; ++k) {
    for (std::size_t l = 0; l < grid.width; ++l) {
      out((k + grid.height / 2) % grid.height, (l + grid.width / 2) % grid.width) = grid(k, l);
    }
  }
  return out;
}

RealGrid power_spectrum(const Spectrum& spectrum, bool shifted) {
  RealGrid p{spectrum.height, spectrum.width, std::vector<double>(spectrum.re.size())};
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    p.values[i] = spectrum.re[i] * spectrum.re[i] + spectrum.im[i] * spectrum.im[i];
  }
  return shifted ? fft_shift(p) : p;
}

std::size_t profile_length(std::size_t n) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(n) / std::numbers::sqrt2)) + 1;
}

std::size_t ring_of_bin(std::size_t k, std::size_t l, std::size_t n) {
  return static_cast<std::size_t>(std::lround(std::hypot(centered(k, n), centered(l, n))));
}

std::size_t max_populated_ring(std::size_t n) {
  std::size_t best = 0;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) best = std::max(best, ring_of_bin(k, l, n));
  return best;
}

SpectralProfile azimuthal_integral(const RealGrid& grid, AzimuthalMode mode) {
  if (grid.height != grid.width) throw UsageError("azimuthal integral requires a square image");
  const std::size_t n = grid.height;
  if (n < 2) throw UsageError("azimuthal integral requires n >= 2");

  const std::size_t length = profile_length(n);
  SpectralProfile profile{std::vector<double>(length, 0.0), n};
  const auto power = power_spectrum(dft2(grid), false);

  if (mode == AzimuthalMode::kBinned) {
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) profile.values[ring_of_bin(k, l, n)] += power(k, l);
    return profile;
  }

  const auto shifted = fft_shift(power);
  const double center = static_cast<double>(n / 2);
  const auto sample = [&](double y, double x) {
    // Bilinear interpolation; neighbours outside the grid count as zero.
    const double fy = std::floor(y), fx = std::floor(x);
    const double ty = y - fy, tx = x - fx;
    double acc = 0.0;
    for (int dy = 0; dy <= 1; ++dy) {
      for (int dx = 0; dx <= 1; ++dx) {
        const double yy = fy + dy, xx = fx + dx;
        if (yy < 0 || xx < 0 || yy >= static_cast<double>(n) || xx >= static_cast<double>(n)) continue;
        const double w = (dy ? ty : 1.0 - ty) * (dx ? tx : 1.0 - tx);
        acc += w * shifted(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
      }
    }
    return acc;
  };

  profile.values[0] = shifted(n / 2, n / 2);
  for (std::size_t r = 1; r < length; ++r) {
    const double radius = static_cast<double>(r);
    const auto samples = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(kTwoPi * radius)));
    double acc = 0.0;
    for (std::size_t t = 0; t < samples; ++t) {
      const double phi = kTwoPi * static_cast<double>(t) / static_cast<double>(samples);
      acc += sample(center + radius * std::sin(phi), center + radius * std::cos(phi));
    }
    profile.values[r] = kTwoPi * radius / static_cast<double>(samples) * acc;
  }
  return profile;
}

SpectralProfile azimuthal_integral(const Image& image, AzimuthalMode mode) {
  return azimuthal_integral(to_grid(image), mode);
}

ProfileStats profile_stats(std::span<const SpectralProfile> profiles) {
  if (profiles.empty()) throw UsageError("profile_stats needs at least one profile");
  const std::size_t length = profiles.front().size();
  const std::size_t n = profiles.front().n;
  std::vector<double> mean(length, 0.0), m2(length, 0.0);
  std::size_t count = 0;
  for (const auto& p : profiles) {
    if (p.size() != length) throw UsageError("profile length mismatch");
    ++count;
    for (std::size_t i = 0; i < length; ++i) {
      const double delta = p.values[i] - mean[i];
      mean[i] += delta / static_cast<double>(count);
      m2[i] += delta * (p.values[i] - mean[i]);
    }
  }
  std::vector<double> sd(length);
  for (std::size_t i = 0; i < length; ++i) sd[i] = std::sqrt(std::max(0.0, m2[i] / static_cast<double>(count)));
  return {{std::move(mean), n}, {std::move(sd), n}};
}

}  // namespace specfid
