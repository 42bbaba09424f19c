#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace specfid {

/// Single-channel image with row-major pixels in [0, 1].
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, double fill = 0.0);
  /// Takes ownership of `pixels`; values are validated (finite, within [0,1]).
  Image(std::size_t height, std::size_t width, std::vector<double> pixels);

  /// Builds an image from arbitrary finite values, clamping into [0,1].
  static Image clamped(std::size_t height, std::size_t width, std::vector<double> values);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }
  bool square() const { return height_ == width_; }

  double operator()(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  void set(std::size_t row, std::size_t col, double value);

  std::span<const double> pixels() const { return pixels_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> pixels_;
};

/// BT.601 luma weights used to reduce color rasters to one channel.
inline double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

/// Reads a binary PGM (P5, 8 or 16 bit) or PNG (8-bit gray/RGB, alpha ignored).
/// Throws DataError on unreadable, unsupported or zero-sized files.
Image load_image(const std::filesystem::path& path);

/// 8-bit binary PGM. Values are quantized with round(v * 255).
void save_pgm(const Image& image, const std::filesystem::path& path);

/// 8-bit grayscale PNG, same quantization as save_pgm.
void save_png(const Image& image, const std::filesystem::path& path);

/// Dispatches on the extension (.pgm or .png).
void save_image(const Image& image, const std::filesystem::path& path);

std::uint8_t quantize8(double value);

// ---------------------------------------------------------------------------
// Corpus manifests

enum class Label { kReal, kGenerated };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

enum class SynthKind { kGaussTexture, kChecker, kBlobs, kBimodalNoise };

std::string_view to_string(SynthKind kind);
SynthKind parse_synth_kind(std::string_view text);

struct ManifestEntry {
  std::string path;
  Label label = Label::kReal;
};

struct CorpusManifest {
  std::uint64_t seed = 0;
  std::string kind;
  std::size_t size = 0;
  std::vector<ManifestEntry> entries;
};

/// Writes the manifest as JSON. Paths are stored as given.
void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

/// Parses a manifest; relative entry paths are resolved against the
/// manifest's directory. Throws DataError on malformed content.
CorpusManifest read_manifest(const std::filesystem::path& path);

/// Loads every entry and checks that all images share one size.
std::vector<Image> load_corpus(const CorpusManifest& manifest);

// ---------------------------------------------------------------------------
// Deterministic synthetic corpora

struct SynthSample {
  Image image;
  /// Amplitude mode for bimodal-noise (0 = quiet, 1 = loud); 0 for other kinds.
  int mode = 0;
};

/// One synthetic image. Pure function of its arguments.
SynthSample synth_image(SynthKind kind, std::size_t size, std::uint64_t sub_seed);

/// Sub-seed of the index-th image of a corpus.
inline std::uint64_t corpus_sub_seed(std::uint64_t seed, std::size_t index) {
  return seed ^ static_cast<std::uint64_t>(index);
}

/// In-memory corpus; equivalent to what synth_corpus writes, before quantization.
std::vector<SynthSample> synth_samples(SynthKind kind, std::size_t count, std::size_t size,
                                       std::uint64_t seed);

/// Writes `count` PGM images plus manifest.json into `out_dir` and returns the
/// manifest. `size` must be a power of two >= 8.
CorpusManifest synth_corpus(SynthKind kind, std::size_t count, std::size_t size, std::uint64_t seed,
                            const std::filesystem::path& out_dir, Label label = Label::kReal);

}  // namespace specfid
