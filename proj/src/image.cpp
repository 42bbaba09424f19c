#include "specfid/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "json.hpp"
#include "specfid/errors.hpp"

namespace specfid {

namespace fs = std::filesystem;

namespace {

void check_pixel(double v) {
  if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
    throw UsageError("pixel value outside [0,1]: " + std::to_string(v));
  }
}

void check_dims(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw UsageError("image dimensions must be positive");
}

// ---- PGM -------------------------------------------------------------------

void skip_ws_and_comments(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

std::size_t read_header_int(std::istream& in, const fs::path& path) {
  skip_ws_and_comments(in);
  long long value = -1;
  if (!(in >> value) || value < 0) throw DataError("malformed PGM header: " + path.string());
  return static_cast<std::size_t>(value);
}

Image load_pgm(std::istream& in, const fs::path& path) {
  char magic[2];
  in.read(magic, 2);
  const std::size_t width = read_header_int(in, path);
  const std::size_t height = read_header_int(in, path);
  const std::size_t maxval = read_header_int(in, path);
  if (width == 0 || height == 0) throw DataError("zero-sized image: " + path.string());
  if (maxval == 0 || maxval > 65535) throw DataError("bad PGM maxval: " + path.string());
  in.get();  // single whitespace before raster

  const std::size_t bytes_per = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(width * height * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw DataError("truncated PGM raster: " + path.string());
  }
  std::vector<double> pixels(width * height);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    std::size_t v = bytes_per == 1 ? raw[i] : (std::size_t{raw[2 * i]} << 8) | raw[2 * i + 1];
    pixels[i] = std::min(1.0, static_cast<double>(v) * scale);
  }
  return Image(height, width, std::move(pixels));
}

// ---- PNG -------------------------------------------------------------------

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image load_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DataError("cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw DataError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DataError("libpng init failed");
  }

  std::vector<unsigned char> raster;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  channels = png_get_channels(png, info);
  if (width == 0 || height == 0) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("zero-sized image: " + path.string());
  }
  const std::size_t stride = png_get_rowbytes(png, info);
  raster.resize(stride * height);
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = raster.data() + r * stride;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels != 1 && channels != 3) throw DataError("unsupported PNG channel layout: " + path.string());
  std::vector<double> pixels(std::size_t{width} * height);
  for (std::size_t r = 0; r < height; ++r) {
    const unsigned char* row = raster.data() + r * stride;
    for (std::size_t c = 0; c < width; ++c) {
      double v;
      if (channels == 1) {
        v = row[c] / 255.0;
      } else {
        v = luminance(row[3 * c] / 255.0, row[3 * c + 1] / 255.0, row[3 * c + 2] / 255.0);
      }
      pixels[r * width + c] = std::clamp(v, 0.0, 1.0);
    }
  }
  return Image(height, width, std::move(pixels));
}

}  // namespace

// ---- Image -----------------------------------------------------------------

Image::Image(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), pixels_(height * width, fill) {
  check_dims(height, width);
  check_pixel(fill);
}

Image::Image(std::size_t height, std::size_t width, std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  check_dims(height, width);
  if (pixels_.size() != height * width) throw UsageError("pixel count does not match dimensions");
  for (double v : pixels_) check_pixel(v);
}

Image Image::clamped(std::size_t height, std::size_t width, std::vector<double> values) {
  for (double& v : values) {
    if (!std::isfinite(v)) throw NumericError("non-finite pixel value");
    v = std::clamp(v, 0.0, 1.0);
  }
  return Image(height, width, std::move(values));
}

void Image::set(std::size_t row, std::size_t col, double value) {
  check_pixel(value);
  pixels_[row * width_ + col] = value;
}

std::uint8_t quantize8(double value) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 1.0) * 255.0));
}

Image load_image(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  const auto got = in.gcount();
  if (got >= 2 && sig[0] == 'P' && sig[1] == '5') {
    in.clear();
    in.seekg(0);
    return load_pgm(in, path);
  }
  if (got == 8 && png_sig_cmp(sig, 0, 8) == 0) {
    in.close();
    return load_png(path);
  }
  throw DataError("unsupported image format: " + path.string());
}

void save_pgm(const Image& image, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  std::vector<char> raster(image.size());
  for (std::size_t i = 0; i < raster.size(); ++i) raster[i] = static_cast<char>(quantize8(image.pixels()[i]));
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

void save_png(const Image& image, const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw DataError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw DataError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("libpng init failed");
  }
  std::vector<unsigned char> raster(image.size());
  for (std::size_t i = 0; i < raster.size(); ++i) raster[i] = quantize8(image.pixels()[i]);
  std::vector<png_bytep> rows(image.height());
  for (std::size_t r = 0; r < image.height(); ++r) rows[r] = raster.data() + r * image.width();

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("PNG encode failed: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void save_image(const Image& image, const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png") {
    save_png(image, path);
  } else if (ext == ".pgm") {
    save_pgm(image, path);
  } else {
    throw UsageError("unsupported output extension: " + ext);
  }
}

// ---- manifests -------------------------------------------------------------

std::string_view to_string(Label label) { return label == Label::kReal ? "real" : "generated"; }

Label parse_label(std::string_view text) {
  if (text == "real") return Label::kReal;
  if (text == "generated") return Label::kGenerated;
  throw DataError("unknown label '" + std::string(text) + "'");
}

std::string_view to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::kGaussTexture: return "gauss-texture";
    case SynthKind::kChecker: return "checker";
    case SynthKind::kBlobs: return "blobs";
    case SynthKind::kBimodalNoise: return "bimodal-noise";
  }
  return "?";
}

SynthKind parse_synth_kind(std::string_view text) {
  for (auto kind : {SynthKind::kGaussTexture, SynthKind::kChecker, SynthKind::kBlobs, SynthKind::kBimodalNoise}) {
    if (to_string(kind) == text) return kind;
  }
  throw UsageError("unknown corpus kind '" + std::string(text) + "'");
}

void write_manifest(const CorpusManifest& manifest, const fs::path& path) {
  nlohmann::ordered_json j;
  j["seed"] = manifest.seed;
  j["kind"] = manifest.kind;
  j["size"] = manifest.size;
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : manifest.entries) {
    j["entries"].push_back({{"path", e.path}, {"label", std::string(to_string(e.label))}});
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

CorpusManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  CorpusManifest m;
  try {
    const auto j = nlohmann::json::parse(in);
    m.seed = j.at("seed").get<std::uint64_t>();
    m.kind = j.at("kind").get<std::string>();
    m.size = j.at("size").get<std::size_t>();
    const fs::path base = path.parent_path();
    for (const auto& e : j.at("entries")) {
      fs::path p = e.at("path").get<std::string>();
      if (p.is_relative()) p = base / p;
      m.entries.push_back({p.string(), parse_label(e.at("label").get<std::string>())});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw DataError("malformed manifest " + path.string() + ": " + ex.what());
  }
  return m;
}

std::vector<Image> load_corpus(const CorpusManifest& manifest) {
  std::vector<Image> images;
  images.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    images.push_back(load_image(e.path));
    const auto& img = images.back();
    if (img.height() != images.front().height() || img.width() != images.front().width()) {
      throw DataError("corpus images differ in size: " + e.path);
    }
  }
  return images;
}

}  // namespace specfid
