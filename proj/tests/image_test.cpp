#include <gtest/gtest.h>

#include <fstream>
#include <iterator>

#include "specfid/errors.hpp"
#include "specfid/image.hpp"
#include "test_support.hpp"

using namespace specfid;
using testsupport::TempDir;

namespace {

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Image, RejectsOutOfRangePixels) {
  EXPECT_THROW(Image(1, 2, std::vector<double>{0.5, 1.5}), UsageError);
  EXPECT_THROW(Image(1, 1, std::vector<double>{std::nan("")}), UsageError);
  const Image c = Image::clamped(1, 3, {-1.0, 0.25, 2.0});
  EXPECT_EQ(c(0, 0), 0.0);
  EXPECT_EQ(c(0, 1), 0.25);
  EXPECT_EQ(c(0, 2), 1.0);
}

TEST(Image, BlackPgm) {
  TempDir dir("img-black");
  write_bytes(dir / "b.pgm", std::string("P5\n2 2\n255\n") + std::string(4, '\0'));
  const Image img = load_image(dir / "b.pgm");
  ASSERT_EQ(img.height(), 2u);
  ASSERT_EQ(img.width(), 2u);
  for (double v : img.pixels()) EXPECT_EQ(v, 0.0);
}

TEST(Image, WhitePixel) {
  TempDir dir("img-white");
  write_bytes(dir / "w.pgm", std::string("P5 1 1 255\n") + std::string(1, '\xff'));
  EXPECT_EQ(load_image(dir / "w.pgm")(0, 0), 1.0);
}

TEST(Image, SixteenBitPgm) {
  TempDir dir("img-16");
  write_bytes(dir / "s.pgm", std::string("P5\n1 1\n65535\n") + std::string("\xff\xff", 2));
  EXPECT_EQ(load_image(dir / "s.pgm")(0, 0), 1.0);
}

TEST(Image, PgmRoundTripWithinQuantization) {
  TempDir dir("img-rt");
  specfid::Rng rng(1);
  const Image img = testsupport::random_image(rng, 9);
  save_pgm(img, dir / "a.pgm");
  save_png(img, dir / "a.png");
  for (const char* name : {"a.pgm", "a.png"}) {
    const Image back = load_image(dir / name);
    ASSERT_EQ(back.height(), 9u);
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_LE(std::abs(back.pixels()[i] - img.pixels()[i]), 1.0 / 255.0);
  }
}

TEST(Image, MalformedFilesAreDataErrors) {
  TempDir dir("img-bad");
  write_bytes(dir / "t.pgm", "P2\n1 1\n255\n0\n");
  EXPECT_THROW(load_image(dir / "t.pgm"), DataError);
  write_bytes(dir / "z.pgm", "P5\n0 0\n255\n");
  EXPECT_THROW(load_image(dir / "z.pgm"), DataError);
  write_bytes(dir / "short.pgm", "P5\n4 4\n255\nab");
  EXPECT_THROW(load_image(dir / "short.pgm"), DataError);
  write_bytes(dir / "x.png", "not a png");
  EXPECT_THROW(load_image(dir / "x.png"), DataError);
  EXPECT_THROW(load_image(dir / "missing.pgm"), DataError);
}

TEST(Image, RgbPngReducedToLuminance) {
  // A 1x1 RGB PNG holding (255, 0, 0), assembled by hand.
  const unsigned char png[] = {
      0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00,
      0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x02, 0x00, 0x00, 0x00, 0x90, 0x77, 0x53, 0xde, 0x00,
      0x00, 0x00, 0x0c, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0xf8, 0xcf, 0xc0, 0x00, 0x00, 0x03, 0x01,
      0x01, 0x00, 0xc9, 0xfe, 0x92, 0xef, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60,
      0x82};
  TempDir dir("img-rgb");
  write_bytes(dir / "r.png", std::string(reinterpret_cast<const char*>(png), sizeof png));
  const Image img = load_image(dir / "r.png");
  EXPECT_NEAR(img(0, 0), 0.299, 1e-12);
}

TEST(Image, Labels) {
  EXPECT_EQ(parse_label("real"), Label::kReal);
  EXPECT_EQ(parse_label("generated"), Label::kGenerated);
  EXPECT_THROW(parse_label("fake"), DataError);
}

TEST(Synth, CheckerAlternates) {
  for (std::uint64_t seed : {0ull, 1ull, 77ull}) {
    const Image img = synth_image(SynthKind::kChecker, 8, seed).image;
    for (std::size_t r = 0; r < 8; ++r) {
      for (std::size_t c = 0; c < 8; ++c) {
        ASSERT_TRUE(img(r, c) == 0.0 || img(r, c) == 1.0);
        if (c + 1 < 8) ASSERT_NE(img(r, c), img(r, c + 1));
        if (r + 1 < 8) ASSERT_NE(img(r, c), img(r + 1, c));
      }
    }
  }
}

TEST(Synth, CorpusIsDeterministicOnDisk) {
  TempDir a("synth-a"), b("synth-b");
  for (auto kind : {SynthKind::kGaussTexture, SynthKind::kBlobs, SynthKind::kBimodalNoise, SynthKind::kChecker}) {
    const auto ma = synth_corpus(kind, 5, 16, 123, a.path());
    const auto mb = synth_corpus(kind, 5, 16, 123, b.path());
    ASSERT_EQ(ma.entries.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(read_bytes(ma.entries[i].path), read_bytes(mb.entries[i].path));
    }
    EXPECT_EQ(read_bytes(a / "manifest.json"), read_bytes(b / "manifest.json"));
  }
}

TEST(Synth, ManifestRoundTrip) {
  TempDir dir("manifest");
  const auto written = synth_corpus(SynthKind::kBlobs, 3, 8, 5, dir.path(), Label::kGenerated);
  const auto read = read_manifest(dir / "manifest.json");
  EXPECT_EQ(read.seed, 5u);
  EXPECT_EQ(read.kind, "blobs");
  EXPECT_EQ(read.size, 8u);
  ASSERT_EQ(read.entries.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(read.entries[i].label, Label::kGenerated);
    EXPECT_TRUE(std::filesystem::equivalent(read.entries[i].path, written.entries[i].path));
  }
  const auto images = load_corpus(read);
  ASSERT_EQ(images.size(), 3u);
  EXPECT_EQ(images[0].height(), 8u);
}

TEST(Synth, BadManifestIsDataError) {
  TempDir dir("manifest-bad");
  write_bytes(dir / "m.json", "{\"seed\": 1, \"kind\": \"x\", \"size\": 8, \"entries\": [{\"path\": \"a.pgm\", \"label\": \"maybe\"}]}");
  EXPECT_THROW(read_manifest(dir / "m.json"), DataError);
  write_bytes(dir / "n.json", "{not json");
  EXPECT_THROW(read_manifest(dir / "n.json"), DataError);
}

TEST(Synth, PreconditionsChecked) {
  TempDir dir("synth-pre");
  EXPECT_THROW(synth_corpus(SynthKind::kChecker, 1, 12, 0, dir.path()), UsageError);
  EXPECT_THROW(synth_corpus(SynthKind::kChecker, 1, 4, 0, dir.path()), UsageError);
  EXPECT_THROW(synth_corpus(SynthKind::kChecker, 0, 8, 0, dir.path()), UsageError);
}

TEST(Synth, BimodalModesBalanced) {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto samples = synth_samples(SynthKind::kBimodalNoise, 1000, 64, seed);
    std::size_t loud = 0;
    for (const auto& s : samples) loud += s.mode == 1;
    EXPECT_GE(loud, 400u);
    EXPECT_GE(1000 - loud, 400u);
  }
}

TEST(Synth, PixelsAlwaysInRange) {
  for (auto kind : {SynthKind::kGaussTexture, SynthKind::kBlobs, SynthKind::kBimodalNoise}) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Image img = synth_image(kind, 16, s).image;
      for (double v : img.pixels()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
    }
  }
}
