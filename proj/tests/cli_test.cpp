#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "specfid/cli.hpp"
#include "specfid/profile_io.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = specfid::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

std::string value_of(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
  }
  return {};
}

// Shared fixtures: a small real/generated corpus pair and their profiles.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testsupport::TempDir("cli");
    const auto& d = dir_->path();
    ASSERT_EQ(run({"synth", "--kind", "gauss-texture", "--count", "60", "--size", "16", "--seed", "1", "--out",
                   (d / "real").string()})
                  .code,
              0);
    ASSERT_EQ(run({"synth", "--kind", "gauss-texture", "--count", "60", "--size", "16", "--seed", "2", "--label",
                   "generated", "--out", (d / "gen").string()})
                  .code,
              0);
    ASSERT_EQ(run({"synth", "--kind", "checker", "--count", "60", "--size", "16", "--seed", "3", "--label",
                   "generated", "--out", (d / "checker").string()})
                  .code,
              0);
    for (const char* name : {"real", "gen", "checker"}) {
      ASSERT_EQ(run({"profile", "--manifest", (d / name / "manifest.json").string(), "--out",
                     (d / (std::string(name) + ".csv")).string()})
                    .code,
                0);
    }
    const std::string checker = read_file(d / "checker.csv");
    write_file(d / "both.csv", read_file(d / "real.csv") + checker.substr(checker.find('\n') + 1));
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path path(const std::string& leaf) { return dir_->path() / leaf; }
  static std::string p(const std::string& leaf) { return path(leaf).string(); }

  static testsupport::TempDir* dir_;
};

testsupport::TempDir* CliTest::dir_ = nullptr;

}  // namespace

TEST_F(CliTest, SynthWritesManifestImagesAndEcho) {
  EXPECT_TRUE(fs::exists(path("real/manifest.json")));
  EXPECT_TRUE(fs::exists(path("real/synth.config.json")));
  const auto manifest = specfid::read_manifest(path("real/manifest.json"));
  EXPECT_EQ(manifest.entries.size(), 60u);
}

TEST_F(CliTest, ProfileCsvShape) {
  const auto set = specfid::read_profile_csv(path("real.csv"));
  EXPECT_EQ(set.size(), 60u);
  EXPECT_EQ(set.profiles.front().size(), specfid::profile_length(16));
}

TEST_F(CliTest, ProfileOfImageDirectory) {
  const fs::path d = path("three");
  fs::create_directories(d);
  specfid::Rng rng(4);
  for (int i = 0; i < 3; ++i) specfid::save_png(testsupport::random_image(rng, 16), d / ("img" + std::to_string(i) + ".png"));
  const auto r = run({"profile", "--dir", d.string(), "--threads", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(r.out), 4u);
  std::istringstream in(r.out);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')), specfid::profile_length(16));
  // Thread count does not change the result.
  EXPECT_EQ(run({"profile", "--dir", d.string(), "--threads", "1"}).out, r.out);
}

TEST_F(CliTest, SdOfIdenticalSetsIsZero) {
  const auto r = run({"sd", p("real.csv"), p("real.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "sd 0.0\n");
  const auto raw = run({"sd", p("real.csv"), p("checker.csv"), "--scale", "raw"});
  EXPECT_EQ(raw.code, 0);
  EXPECT_GT(std::stod(value_of(raw.out, "sd")), 0.0);
}

TEST_F(CliTest, CsSeparatesAndMatches) {
  const auto same = run({"cs", p("real.csv"), p("gen.csv"), "--seed", "1"});
  ASSERT_EQ(same.code, 0) << same.err;
  EXPECT_GE(std::stod(value_of(same.out, "cs")), 0.5);
  const auto self = run({"cs", p("real.csv"), p("real.csv"), "--seed", "1"});
  EXPECT_GE(std::stod(value_of(self.out, "cs")), 0.9);
  const auto sep = run({"cs", p("real.csv"), p("checker.csv"), "--seed", "1"});
  EXPECT_LE(std::stod(value_of(sep.out, "cs")), 0.1);
}

TEST_F(CliTest, SingleLabelledCsvSplitsByLabel) {
  EXPECT_EQ(run({"sd", p("both.csv")}).out, run({"sd", p("real.csv"), p("checker.csv")}).out);
}

TEST_F(CliTest, DetectAndTransfer) {
  const auto r = run({"detect", p("real.csv"), p("checker.csv"), "--seed", "3", "--model", "linsvm", "--transfer",
                      p("real.csv"), p("gen.csv"), "--out", p("detect.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GE(std::stod(value_of(r.out, "test_accuracy")), 0.95);
  EXPECT_FALSE(value_of(r.out, "transfer_accuracy").empty());
  const auto j = nlohmann::json::parse(read_file(path("detect.json")));
  EXPECT_TRUE(j.contains("model"));
  EXPECT_TRUE(fs::exists(path("detect.json.config.json")));
}

TEST_F(CliTest, StatsAndCluster) {
  const auto s = run({"stats", p("real.csv"), "--svg", p("stats.svg")});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(s.out.substr(0, s.out.find('\n')), "r,mean,std");
  EXPECT_EQ(count_lines(s.out), 1 + specfid::profile_length(16));
  EXPECT_TRUE(testsupport::well_formed_xml(read_file(path("stats.svg"))));

  const auto c = run({"cluster", p("both.csv"), "--k", "2", "--seed", "5", "--svg", p("cluster.svg")});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_FALSE(value_of(c.out, "feature_index").empty());
  EXPECT_TRUE(testsupport::well_formed_xml(read_file(path("cluster.svg"))));
}

TEST_F(CliTest, UpsampleDemo) {
  const auto r = run({"upsample-demo", "--length", "16", "--seed", "2", "--out", p("up.csv"), "--svg", p("up.svg")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read_file(path("up.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,abs_a,abs_up,abs_up_nearest,abs_up_bilinear");
  EXPECT_EQ(count_lines(csv), 1u + 32u);
  EXPECT_LT(std::stod(value_of(r.out, "replica_max_abs_error")), 1e-9);
  EXPECT_TRUE(testsupport::well_formed_xml(read_file(path("up.svg"))));
  specfid::save_png(specfid::synth_image(specfid::SynthKind::kChecker, 8, 1).image, path("small.png"));
  const auto img = run({"upsample-demo", "--seed", "0", "--image", p("small.png"), "--method", "nearest", "--out",
                        p("big.png")});
  ASSERT_EQ(img.code, 0) << img.err;
  EXPECT_EQ(specfid::load_image(path("big.png")).width(), 16u);
}

TEST_F(CliTest, ReportTableAndArtifacts) {
  const auto r = run({"report", p("real.csv"), p("checker.csv"), "--seed", "1", "--cs-epochs", "200", "--json",
                      p("report.json"), "--svg", p("report.svg")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(read_file(path("report.json")));
  const double lr_train = j["lr"]["train_acc"];
  EXPECT_NEAR(j["cs"].get<double>(), 1.0 - 2.0 * std::abs(lr_train - 0.5), 1e-12);
  EXPECT_TRUE(testsupport::well_formed_xml(read_file(path("report.svg"))));
  std::istringstream in(r.out);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first.rfind("sd", 0), 0u);
}

TEST_F(CliTest, TrainRunDirectory) {
  const fs::path run_dir = path("run");
  const auto r = run({"train", "--manifest", p("real/manifest.json"), "--epochs", "2", "--batch", "16", "--hidden",
                      "8", "--latent-dim", "4", "--eval-samples", "16", "--cs-quick-epochs", "10", "--spectral",
                      "--seed", "7", "--out", run_dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"config.json", "log.csv", "model.json", "command.config.json", "generated_profiles.csv", "sd.svg"})
    EXPECT_TRUE(fs::exists(run_dir / f)) << f;
  const auto cfg = nlohmann::json::parse(read_file(run_dir / "config.json"));
  EXPECT_EQ(cfg["spectral"], true);
  EXPECT_EQ(cfg["image_size"], 16);
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
  write_file(path("cfg.json"), R"({"seed": 9, "epochs": 50, "scale": "raw"})");
  const auto from_file = run({"cs", p("real.csv"), p("gen.csv"), "--config", p("cfg.json"), "--out", p("c1.json")});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  const auto flags = run({"cs", p("real.csv"), p("gen.csv"), "--seed", "9", "--epochs", "50", "--out", p("c2.json")});
  EXPECT_EQ(from_file.out, flags.out);
  const auto echo = nlohmann::json::parse(read_file(path("c1.json.config.json")));
  EXPECT_EQ(echo["seed"], 9);
  EXPECT_EQ(echo["epochs"], 50);

  const auto override = run({"cs", p("real.csv"), p("gen.csv"), "--config", p("cfg.json"), "--epochs", "7", "--out",
                             p("c3.json")});
  ASSERT_EQ(override.code, 0);
  EXPECT_EQ(nlohmann::json::parse(read_file(path("c3.json.config.json")))["epochs"], 7);

  write_file(path("nested.json"), R"({"cs": {"seed": 9, "epochs": 50}})");
  EXPECT_EQ(run({"cs", p("real.csv"), p("gen.csv"), "--config", p("nested.json")}).out, flags.out);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"nonsense"}).code, 1);
  EXPECT_EQ(run({"cs", p("real.csv")}).code, 1);  // missing --seed
  EXPECT_EQ(run({"synth", "--seed", "1", "--size", "12", "--out", p("bad")}).code, 1);
  EXPECT_EQ(run({"sd", p("real.csv"), p("real.csv"), "--scale", "cubic"}).code, 1);
  EXPECT_EQ(run({"sd", p("missing.csv"), p("real.csv")}).code, 2);
  write_file(path("garbage.csv"), "label,r0\nreal,abc\n");
  EXPECT_EQ(run({"sd", p("garbage.csv"), p("real.csv")}).code, 2);
  write_file(path("broken.json"), "{not json");
  EXPECT_EQ(run({"sd", p("real.csv"), p("real.csv"), "--config", p("broken.json")}).code, 2);
  const auto numeric = run({"train", "--manifest", p("real/manifest.json"), "--epochs", "1", "--batch", "8",
                            "--hidden", "4", "--latent-dim", "2", "--eval-samples", "4", "--lr", "1e300", "--seed",
                            "1", "--out", p("diverged")});
  EXPECT_EQ(numeric.code, 3) << numeric.err;
  EXPECT_NE(numeric.err.find("numeric error"), std::string::npos);
}

TEST_F(CliTest, SeededCommandsAreByteIdentical) {
  const std::vector<std::vector<std::string>> commands = {
      {"cs", p("real.csv"), p("checker.csv"), "--seed", "4", "--out", "@"},
      {"detect", p("real.csv"), p("gen.csv"), "--seed", "4", "--out", "@"},
      {"cluster", p("both.csv"), "--seed", "4", "--out", "@"},
      {"upsample-demo", "--seed", "4", "--out", "@"},
      {"report", p("real.csv"), p("gen.csv"), "--seed", "4", "--cs-epochs", "100", "--json", "@"},
  };
  int idx = 0;
  for (auto cmd : commands) {
    std::string outputs[2], stdouts[2];
    for (int rep = 0; rep < 2; ++rep) {
      const std::string target = p("det" + std::to_string(idx) + "_" + std::to_string(rep));
      auto args = cmd;
      for (auto& a : args)
        if (a == "@") a = target;
      const auto r = run(args);
      ASSERT_EQ(r.code, 0) << cmd[0] << ": " << r.err;
      outputs[rep] = read_file(target);
      stdouts[rep] = r.out;
    }
    EXPECT_FALSE(outputs[0].empty()) << cmd[0];
    EXPECT_EQ(outputs[0], outputs[1]) << cmd[0];
    EXPECT_EQ(stdouts[0], stdouts[1]) << cmd[0];
    ++idx;
  }
  const std::string a = p("synthA"), b = p("synthB");
  run({"synth", "--kind", "blobs", "--count", "5", "--size", "16", "--seed", "11", "--out", a});
  run({"synth", "--kind", "blobs", "--count", "5", "--size", "16", "--seed", "11", "--out", b});
  for (const auto& entry : fs::directory_iterator(a)) {
    if (entry.path().filename() == "synth.config.json") continue;
    EXPECT_EQ(read_file(entry.path()), read_file(fs::path(b) / entry.path().filename())) << entry.path();
  }
}

TEST_F(CliTest, InstalledBinaryExitCodes) {
  const std::string bin = SPECFID_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int s = std::system((bin + " " + args + " > " + p("bin_out.txt") + " 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("sd " + p("real.csv") + " " + p("real.csv")), 0);
  EXPECT_EQ(read_file(path("bin_out.txt")), "sd 0.0\n");
  EXPECT_EQ(status("sd"), 1);
  EXPECT_EQ(status("sd " + p("nothing.csv")), 2);
}
