#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "specfid/errors.hpp"
#include "specfid/image.hpp"
#include "specfid/rng.hpp"

namespace specfid {

namespace fs = std::filesystem;

namespace {

// Zero-mean, unit-variance periodic Gaussian random field.
std::vector<double> smooth_field(std::size_t n, double sigma, Rng& rng) {
  std::vector<double> noise(n * n);
  for (double& v : noise) v = rng.normal();

  const auto half = static_cast<long>(n / 2);
  std::vector<double> kernel(n);
  double norm = 0.0;
  for (long d = -half; d < static_cast<long>(n) - half; ++d) {
    const double w = std::exp(-0.5 * static_cast<double>(d * d) / (sigma * sigma));
    kernel[static_cast<std::size_t>((d + static_cast<long>(n)) % static_cast<long>(n))] = w;
    norm += w;
  }
  for (double& w : kernel) w /= norm;

  auto blur_axis = [n, &kernel](const std::vector<double>& src, bool rows) {
    std::vector<double> dst(n * n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t rr = rows ? r : (r + k) % n;
          const std::size_t cc = rows ? (c + k) % n : c;
          acc += kernel[k] * src[rr * n + cc];
        }
        dst[r * n + c] = acc;
      }
    }
    return dst;
  };
  auto field = blur_axis(blur_axis(noise, true), false);

  double mean = 0.0;
  for (double v : field) mean += v;
  mean /= static_cast<double>(field.size());
  double var = 0.0;
  for (double v : field) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(field.size()));
  for (double& v : field) v = sd > 0.0 ? (v - mean) / sd : 0.0;
  return field;
}

constexpr double kQuietNoise = 0.01;
constexpr double kLoudNoise = 0.08;

}  // namespace

SynthSample synth_image(SynthKind kind, std::size_t size, std::uint64_t sub_seed) {
  if (size == 0) throw UsageError("synthetic image size must be positive");
  Rng rng(sub_seed);
  const std::size_t n = size;
  const double dn = static_cast<double>(n);
  std::vector<double> px(n * n, 0.0);
  int mode = 0;

  switch (kind) {
    case SynthKind::kChecker: {
      const std::size_t phase = rng.below(2);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) px[r * n + c] = static_cast<double>((r + c + phase) % 2);
      break;
    }
    case SynthKind::kGaussTexture: {
      const auto field = smooth_field(n, std::max(1.0, dn / 16.0), rng);
      for (std::size_t i = 0; i < px.size(); ++i) px[i] = 0.5 + 0.18 * field[i];
      break;
    }
    case SynthKind::kBlobs: {
      std::fill(px.begin(), px.end(), 0.1);
      const std::uint64_t blobs = 3 + rng.below(4);
      for (std::uint64_t b = 0; b < blobs; ++b) {
        const double cy = rng.uniform(0.0, dn);
        const double cx = rng.uniform(0.0, dn);
        const double sigma = rng.uniform(dn / 16.0, dn / 6.0);
        const double amp = rng.uniform(0.3, 0.8);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t c = 0; c < n; ++c) {
            const double dy = static_cast<double>(r) - cy;
            const double dx = static_cast<double>(c) - cx;
            px[r * n + c] += amp * std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
          }
        }
      }
      break;
    }
    case SynthKind::kBimodalNoise: {
      mode = rng.bernoulli(0.5) ? 1 : 0;
      const double amp = mode == 1 ? kLoudNoise : kQuietNoise;
      const auto field = smooth_field(n, std::max(1.0, dn / 8.0), rng);
      // White noise plus a pixel-alternating component, so the top frequency
      // ring carries power proportional to amp^2 even though it holds few bins.
      const double sign = rng.bernoulli(0.5) ? 0.5 : -0.5;
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
          const double alt = (r + c) % 2 == 0 ? sign : -sign;
          px[r * n + c] = 0.5 + 0.08 * field[r * n + c] + amp * (rng.normal() + alt);
        }
      }
      break;
    }
  }
  return {Image::clamped(n, n, std::move(px)), mode};
}

std::vector<SynthSample> synth_samples(SynthKind kind, std::size_t count, std::size_t size, std::uint64_t seed) {
  std::vector<SynthSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(synth_image(kind, size, corpus_sub_seed(seed, i)));
  return out;
}

CorpusManifest synth_corpus(SynthKind kind, std::size_t count, std::size_t size, std::uint64_t seed,
                            const fs::path& out_dir, Label label) {
  if (count == 0) throw UsageError("corpus count must be >= 1");
  if (size < 8 || (size & (size - 1)) != 0) throw UsageError("corpus size must be a power of two >= 8");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());

  CorpusManifest manifest;
  manifest.seed = seed;
  manifest.kind = std::string(to_string(kind));
  manifest.size = size;
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.pgm", i);
    const auto sample = synth_image(kind, size, corpus_sub_seed(seed, i));
    save_pgm(sample.image, out_dir / name);
    manifest.entries.push_back({name, label});
  }
  // The file stores paths relative to its directory; the caller gets resolved ones.
  write_manifest(manifest, out_dir / "manifest.json");
  for (auto& e : manifest.entries) e.path = (out_dir / e.path).string();
  return manifest;
}

}  // namespace specfid
