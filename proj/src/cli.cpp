#include "specfid/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "specfid/errors.hpp"
#include "specfid/fidelity.hpp"
#include "specfid/ganlab.hpp"
#include "specfid/image.hpp"
#include "specfid/linmodels.hpp"
#include "specfid/plot.hpp"
#include "specfid/profile_io.hpp"
#include "specfid/resample.hpp"
#include "specfid/rng.hpp"
#include "specfid/spectrum.hpp"

namespace specfid::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads `--config` files. Keys are option long names (underscores allowed in
// place of dashes) and apply to the selected subcommand; an object keyed by
// the subcommand name is read as a section. Flags given on the command line
// win because CLI11 only fills options that are still empty.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw DataError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw DataError("config file must hold a JSON object");
    const auto subs = app_->get_subcommands();
    if (subs.empty()) return {};
    const std::string sub = subs.front()->get_name();

    std::vector<CLI::ConfigItem> items;
    auto add_items = [&](const json& object) {
      for (const auto& [key, value] : object.items()) {
        if (value.is_object()) continue;
        CLI::ConfigItem item;
        item.parents = {sub};
        item.name = key;
        std::replace(item.name.begin(), item.name.end(), '_', '-');
        if (value.is_array()) {
          for (const auto& v : value) item.inputs.push_back(scalar_text(v));
        } else {
          item.inputs.push_back(scalar_text(value));
        }
        items.push_back(std::move(item));
      }
    };
    add_items(j);
    if (j.contains(sub) && j[sub].is_object()) add_items(j[sub]);
    return items;
  }

 private:
  static std::string scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return "";
    return v.dump();
  }

  const CLI::App* app_;
};

std::string display(double v) {
  std::string s = format_double(v);
  if (s.find_first_of(".ein") == std::string::npos) s += ".0";
  return s;
}

// Resolved options of a subcommand as JSON; numbers and booleans typed.
ordered_json resolved_config(const CLI::App& sub) {
  ordered_json j;
  j["command"] = sub.get_name();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config" || name.empty()) continue;
    std::string key = name;
    std::replace(key.begin(), key.end(), '-', '_');
    if (opt->get_expected_min() == 0) {
      j[key] = opt->count() > 0 && opt->as<bool>();
      continue;
    }
    std::vector<std::string> values = opt->count() > 0 ? opt->results() : std::vector<std::string>{};
    if (values.empty() && !opt->get_default_str().empty()) values.push_back(opt->get_default_str());
    auto typed = [](const std::string& s) -> ordered_json {
      auto parsed = ordered_json::parse(s, nullptr, false);
      if (!parsed.is_discarded() && (parsed.is_number() || parsed.is_boolean())) return parsed;
      return s;
    };
    if (values.empty()) {
      j[key] = nullptr;
    } else if (opt->get_expected_max() > 1 || values.size() > 1) {
      ordered_json arr = ordered_json::array();
      for (const auto& v : values) arr.push_back(typed(v));
      j[key] = arr;
    } else {
      j[key] = typed(values.front());
    }
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

void write_echo(const CLI::App& sub, const fs::path& output) {
  fs::path echo = output;
  echo += ".config.json";
  write_text(echo, resolved_config(sub).dump(2) + "\n");
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".png";
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .pgm or .png images in " + dir.string());
  return files;
}

struct Corpus {
  std::vector<Image> images;
  std::vector<Label> labels;
};

Corpus load_corpus_source(const std::string& manifest, const std::string& dir, Label dir_label) {
  if (manifest.empty() == dir.empty()) throw UsageError("give exactly one of --manifest and --dir");
  Corpus c;
  if (!manifest.empty()) {
    const auto m = read_manifest(manifest);
    c.images = load_corpus(m);
    for (const auto& e : m.entries) c.labels.push_back(e.label);
  } else {
    for (const auto& p : list_images(dir)) {
      c.images.push_back(load_image(p));
      c.labels.push_back(dir_label);
    }
    for (const auto& img : c.images) {
      if (img.height() != c.images.front().height() || img.width() != c.images.front().width()) {
        throw DataError("images in " + dir + " differ in size");
      }
    }
  }
  return c;
}

std::vector<SpectralProfile> profile_all(const std::vector<Image>& images, AzimuthalMode mode, unsigned threads) {
  std::vector<SpectralProfile> out(images.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, images.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < images.size();) {
      try {
        out[i] = azimuthal_integral(images[i], mode);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

// Two files: every row of each. One file: split by label.
std::pair<std::vector<SpectralProfile>, std::vector<SpectralProfile>> load_pair(const std::vector<std::string>& files) {
  if (files.size() == 2) {
    return {read_profile_csv(files[0]).profiles, read_profile_csv(files[1]).profiles};
  }
  if (files.size() == 1) {
    const auto set = read_profile_csv(files[0]);
    return {set.with_label(Label::kReal), set.with_label(Label::kGenerated)};
  }
  throw UsageError("expected one labelled profile CSV or two CSVs (real, generated)");
}

std::vector<double> index_axis(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i);
  return x;
}

PlotSeries stats_series(const std::string& label, const std::vector<SpectralProfile>& profiles) {
  const auto stats = profile_stats(profiles);
  return {label, index_axis(stats.mean.size()), stats.mean.values, stats.std.values};
}

YScale parse_y_scale(const std::string& s) {
  if (s == "log") return YScale::kLog;
  if (s == "linear") return YScale::kLinear;
  throw UsageError("unknown y scale '" + s + "'");
}

AzimuthalMode parse_mode(const std::string& s) {
  if (s == "binned") return AzimuthalMode::kBinned;
  if (s == "interpolated") return AzimuthalMode::kInterpolated;
  throw UsageError("unknown mode '" + s + "'");
}

LinearKind parse_model(const std::string& s) {
  if (s == "logreg") return LinearKind::kLogReg;
  if (s == "linsvm") return LinearKind::kLinSvm;
  throw UsageError("unknown model '" + s + "'");
}

UpsampleMethod parse_method(const std::string& s) {
  if (s == "bed-of-nails") return UpsampleMethod::kBedOfNails;
  if (s == "nearest") return UpsampleMethod::kNearest;
  if (s == "bilinear") return UpsampleMethod::kBilinear;
  throw UsageError("unknown up-sampling method '" + s + "'");
}

struct Options {
  // shared
  std::uint64_t seed = 0;
  std::string out;
  std::string svg;
  std::vector<std::string> inputs;

  // synth
  std::string kind = "gauss-texture";
  std::size_t count = 100;
  std::size_t size = 32;
  std::string label = "real";

  // profile / train corpus
  std::string manifest;
  std::string dir;
  std::string mode = "binned";
  unsigned threads = 0;

  // metrics
  std::string scale = "log1p";
  int epochs = 0;
  double lr = 0.0;
  double reg = 1e-3;
  double split = 0.5;
  std::string model = "logreg";
  std::vector<std::string> transfer;
  std::size_t k = 2;

  // upsample-demo
  std::size_t length = 32;
  std::string method = "bilinear";
  std::string image;

  // train
  std::string loss = "dcgan";
  bool spectral = false;
  std::size_t batch = 128;
  double gp_lambda = 10.0;
  double clip = 0.01;
  int n_critic = 0;
  std::size_t latent_dim = 32;
  std::size_t hidden = 128;
  std::size_t image_size = 0;
  std::string df_scale = "log1p";
  bool df_standardize = true;
  std::size_t eval_samples = 256;
  int cs_quick_epochs = 100;

  // report
  std::string json_out;
  std::string y_scale = "log";
  std::string title = "Mean spectral profiles";
  int cs_epochs = 1000;
};

// ---- commands --------------------------------------------------------------

int cmd_synth(const Options& o, const CLI::App& sub, std::ostream& out) {
  const auto manifest = synth_corpus(parse_synth_kind(o.kind), o.count, o.size, o.seed, o.out, parse_label(o.label));
  write_echo(sub, fs::path(o.out) / "synth");
  out << "wrote " << manifest.entries.size() << " images to " << o.out << "\n";
  return 0;
}

int cmd_profile(const Options& o, const CLI::App& sub, std::ostream& out) {
  const auto corpus = load_corpus_source(o.manifest, o.dir, parse_label(o.label));
  ProfileSet set;
  set.profiles = profile_all(corpus.images, parse_mode(o.mode), o.threads);
  set.labels = corpus.labels;
  if (o.out.empty()) {
    out << profiles_to_csv(set);
  } else {
    write_profile_csv(set, o.out);
    write_echo(sub, o.out);
  }
  return 0;
}

int cmd_stats(const Options& o, const CLI::App& sub, std::ostream& out) {
  if (o.inputs.size() != 1) throw UsageError("stats takes one profile CSV");
  const auto set = read_profile_csv(o.inputs.front());
  const auto profiles = sub.get_option("--label")->count() > 0 ? set.with_label(parse_label(o.label)) : set.profiles;
  if (profiles.empty()) throw DataError("no profiles selected");
  const auto stats = profile_stats(profiles);
  std::ostringstream csv;
  csv << "r,mean,std\n";
  for (std::size_t r = 0; r < stats.mean.size(); ++r) {
    csv << r << ',' << format_double(stats.mean.values[r]) << ',' << format_double(stats.std.values[r]) << '\n';
  }
  if (o.out.empty()) {
    out << csv.str();
  } else {
    write_text(o.out, csv.str());
    write_echo(sub, o.out);
  }
  if (!o.svg.empty()) {
    PlotSpec plot;
    plot.series.push_back(stats_series("mean +/- std", profiles));
    plot.title = "Spectral profile (" + std::to_string(profiles.size()) + " images)";
    write_svg(plot, o.svg);
  }
  return 0;
}

int cmd_sd(const Options& o, const CLI::App&, std::ostream& out) {
  const auto [real, generated] = load_pair(o.inputs);
  out << "sd " << display(spectral_difference(real, generated, parse_sd_scale(o.scale))) << "\n";
  return 0;
}

int cmd_cs(const Options& o, const CLI::App& sub, std::ostream& out) {
  const auto [real, generated] = load_pair(o.inputs);
  CsConfig config;
  config.seed = o.seed;
  if (o.epochs > 0) config.epochs = o.epochs;
  if (o.lr > 0) config.lr = o.lr;
  const auto result = evaluate_cs(real, generated, config);
  out << "cs " << display(result.cs) << "\n"
      << "train_accuracy " << display(result.train_accuracy) << "\n"
      << "n_per_class " << result.n_real << "\n";
  if (!o.out.empty()) {
    ordered_json j;
    j["cs"] = result.cs;
    j["train_accuracy"] = result.train_accuracy;
    j["n_real"] = result.n_real;
    j["n_generated"] = result.n_generated;
    write_text(o.out, j.dump(2) + "\n");
    write_echo(sub, o.out);
  }
  return 0;
}

int cmd_detect(const Options& o, const CLI::App& sub, std::ostream& out) {
  const auto [real, generated] = load_pair(o.inputs);
  DetectionConfig config;
  config.model = parse_model(o.model);
  config.split = o.split;
  config.seed = o.seed;
  config.epochs = o.epochs;
  config.lr = o.lr;
  config.reg = o.reg;
  const auto result = evaluate_detection(real, generated, config);
  out << "model " << to_string(config.model) << "\n"
      << "train_accuracy " << display(result.train_accuracy) << "\n"
      << "test_accuracy " << display(result.test_accuracy) << "\n";
  ordered_json j;
  j["train_accuracy"] = result.train_accuracy;
  j["test_accuracy"] = result.test_accuracy;
  j["n_train"] = result.n_train;
  j["n_test"] = result.n_test;
  if (!o.transfer.empty()) {
    const auto [real_b, generated_b] = load_pair(o.transfer);
    const auto t = evaluate_transfer(real, generated, real_b, generated_b, config);
    out << "transfer_accuracy " << display(t.test_accuracy) << "\n";
    j["transfer_accuracy"] = t.test_accuracy;
    j["n_transfer"] = t.n_test;
  }
  j["model"] = model_to_json(result.model, result.standardizer);
  if (!o.out.empty()) {
    write_text(o.out, j.dump(2) + "\n");
    write_echo(sub, o.out);
  }
  return 0;
}

int cmd_cluster(const Options& o, const CLI::App& sub, std::ostream& out) {
  if (o.inputs.size() != 1) throw UsageError("cluster takes one profile CSV");
  const auto set = read_profile_csv(o.inputs.front());
  const auto result = cluster_by_top_frequency(profile_values(set.profiles), o.k, o.seed);
  out << "feature_index " << result.feature_index << "\n";
  for (std::size_t c = 0; c < o.k; ++c) {
    out << "cluster " << c << " size " << result.cluster_sizes[c] << " mean_top "
        << display(result.cluster_mean_profiles[c][result.feature_index]) << "\n";
  }
  if (!o.out.empty()) {
    std::ostringstream csv;
    csv << "index,label,cluster\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
      csv << i << ',' << to_string(set.labels[i]) << ',' << result.clusters.assignments[i] << '\n';
    }
    write_text(o.out, csv.str());
    write_echo(sub, o.out);
  }
  if (!o.svg.empty()) {
    PlotSpec plot;
    plot.title = "Cluster mean profiles";
    for (std::size_t c = 0; c < o.k; ++c) {
      const auto& m = result.cluster_mean_profiles[c];
      plot.series.push_back({"cluster " + std::to_string(c) + " (" + std::to_string(result.cluster_sizes[c]) + ")",
                             index_axis(m.size()), m, std::nullopt});
    }
    write_svg(plot, o.svg);
  }
  return 0;
}

int cmd_upsample_demo(const Options& o, const CLI::App& sub, std::ostream& out) {
  if (!o.image.empty()) {
    // 2D variant: up-sample an image and write it with its profile CSV.
    const Image img = load_image(o.image);
    const Image up = upsample2d(img, parse_method(o.method));
    if (o.out.empty()) throw UsageError("--image needs --out for the up-sampled image");
    save_image(up, o.out);
    ProfileSet set;
    set.profiles = {azimuthal_integral(up)};
    set.labels = {Label::kGenerated};
    fs::path csv = o.out;
    csv += ".profile.csv";
    write_profile_csv(set, csv);
    write_echo(sub, o.out);
    return 0;
  }
  if (o.length < 2) throw UsageError("--length must be >= 2");
  Rng rng(o.seed);
  std::vector<double> signal(o.length);
  for (double& v : signal) v = rng.normal();
  const auto a = dft(std::span<const double>(signal));
  const auto up = dft(std::span<const double>(upsample1d(signal, UpsampleMethod::kBedOfNails)));
  const auto up_nn = dft(std::span<const double>(upsample1d(signal, UpsampleMethod::kNearest)));
  const auto up_bl = dft(std::span<const double>(upsample1d(signal, UpsampleMethod::kBilinear)));
  const std::size_t n = o.length;

  std::ostringstream csv;
  csv << "k,abs_a,abs_up,abs_up_nearest,abs_up_bilinear\n";
  std::vector<double> ks, ya, yu, yn, yb;
  for (std::size_t k = 0; k < 2 * n; ++k) {
    const double va = std::abs(a[k % n]);
    csv << k << ',' << format_double(va) << ',' << format_double(std::abs(up[k])) << ','
        << format_double(std::abs(up_nn[k])) << ',' << format_double(std::abs(up_bl[k])) << '\n';
    ks.push_back(static_cast<double>(k));
    ya.push_back(va);
    yu.push_back(std::abs(up[k]));
    yn.push_back(std::abs(up_nn[k]));
    yb.push_back(std::abs(up_bl[k]));
  }
  if (o.out.empty()) {
    out << csv.str();
  } else {
    write_text(o.out, csv.str());
    write_echo(sub, o.out);
    const auto report = verify_replica(signal);
    out << "replica_max_abs_error " << display(report.max_abs_err) << "\n";
  }
  if (!o.svg.empty()) {
    PlotSpec plot;
    plot.title = "Spectrum magnitude after 2x up-sampling";
    plot.x_label = "k";
    plot.y_label = "|DFT|";
    plot.y_scale = YScale::kLinear;
    plot.series = {{"base (periodic)", ks, ya, std::nullopt},
                   {"bed-of-nails", ks, yu, std::nullopt},
                   {"nearest", ks, yn, std::nullopt},
                   {"bilinear", ks, yb, std::nullopt}};
    write_svg(plot, o.svg);
  }
  return 0;
}

int cmd_train(const Options& o, const CLI::App& sub, std::ostream& out) {
  if (o.out.empty()) throw UsageError("--out run directory is required");
  const auto corpus = load_corpus_source(o.manifest, o.dir, Label::kReal);
  gan::TrainConfig c;
  c.loss = gan::parse_loss_kind(o.loss);
  c.spectral = o.spectral;
  c.epochs = o.epochs > 0 ? o.epochs : c.epochs;
  c.batch = o.batch;
  c.lr = o.lr > 0 ? o.lr : c.lr;
  c.gp_lambda = o.gp_lambda;
  c.clip = o.clip;
  c.n_critic = o.n_critic;
  c.latent_dim = o.latent_dim;
  c.hidden = o.hidden;
  c.image_size = o.image_size > 0 ? o.image_size : corpus.images.front().height();
  c.seed = o.seed;
  c.df_scale = gan::parse_df_scale(o.df_scale);
  c.df_standardize = o.df_standardize;
  c.eval_samples = o.eval_samples;
  c.cs_quick_epochs = o.cs_quick_epochs;

  const fs::path run_dir = o.out;
  const auto result = gan::train(c, corpus.images, run_dir);

  ProfileSet generated;
  generated.profiles = gan::sample_profiles(result.generator, c.eval_samples, c.image_size, c.seed);
  generated.labels.assign(generated.size(), Label::kGenerated);
  write_profile_csv(generated, run_dir / "generated_profiles.csv");
  write_echo(sub, run_dir / "command");

  if (!result.log.rows.empty()) {
    std::vector<double> epochs, sd;
    for (const auto& r : result.log.rows) {
      epochs.push_back(r.epoch);
      sd.push_back(r.sd);
    }
    PlotSpec plot;
    plot.title = "Spectral difference per epoch";
    plot.x_label = "epoch";
    plot.y_label = "SD";
    plot.y_scale = YScale::kLinear;
    plot.series.push_back({"SD", epochs, sd, std::nullopt});
    write_svg(plot, run_dir / "sd.svg");

    const auto& last = result.log.rows.back();
    out << "epochs " << last.epoch << "\n"
        << "sd " << display(last.sd) << "\n"
        << "cs_quick " << display(last.cs_quick) << "\n";
  }
  return 0;
}

int cmd_report(const Options& o, const CLI::App& sub, std::ostream& out) {
  const auto [real, generated] = load_pair(o.inputs);
  ReportConfig config;
  config.sd_scale = parse_sd_scale(o.scale);
  config.cs.epochs = o.cs_epochs;
  config.cs.seed = o.seed;
  config.split = o.split;
  config.seed = o.seed;
  const auto report = make_report(real, generated, config);

  const std::pair<const char*, double> rows[] = {
      {"sd", report.sd},
      {"cs", report.cs},
      {"lr_train_acc", report.lr_train_acc},
      {"lr_test_acc", report.lr_test_acc},
      {"svm_train_acc", report.svm_train_acc},
      {"svm_test_acc", report.svm_test_acc},
  };
  for (const auto& [name, value] : rows) out << std::left << std::setw(14) << name << display(value) << "\n";
  out << std::left << std::setw(14) << "n_real" << report.n_real << "\n"
      << std::left << std::setw(14) << "n_generated" << report.n_generated << "\n";

  if (!o.json_out.empty()) {
    write_text(o.json_out, to_json(report).dump(2) + "\n");
    write_echo(sub, o.json_out);
  }
  if (!o.svg.empty()) {
    PlotSpec plot;
    plot.title = o.title;
    plot.y_scale = parse_y_scale(o.y_scale);
    plot.series = {stats_series("real", real), stats_series("generated", generated)};
    write_svg(plot, o.svg);
  }
  return 0;
}

int dispatch(const Options& o, const CLI::App& sub, std::ostream& out) {
  const std::string& name = sub.get_name();
  if (name == "synth") return cmd_synth(o, sub, out);
  if (name == "profile") return cmd_profile(o, sub, out);
  if (name == "stats") return cmd_stats(o, sub, out);
  if (name == "sd") return cmd_sd(o, sub, out);
  if (name == "cs") return cmd_cs(o, sub, out);
  if (name == "detect") return cmd_detect(o, sub, out);
  if (name == "cluster") return cmd_cluster(o, sub, out);
  if (name == "upsample-demo") return cmd_upsample_demo(o, sub, out);
  if (name == "train") return cmd_train(o, sub, out);
  if (name == "report") return cmd_report(o, sub, out);
  throw UsageError("unknown command " + name);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral fidelity toolkit for generated images", "specfid"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.allow_config_extras(CLI::config_extras_mode::ignore);

  Options o;

  auto* synth = app.add_subcommand("synth", "Write a deterministic synthetic corpus with a manifest");
  synth->add_option("--kind", o.kind, "gauss-texture, checker, blobs or bimodal-noise")->capture_default_str();
  synth->add_option("--count", o.count, "Number of images")->capture_default_str();
  synth->add_option("--size", o.size, "Image side (power of two)")->capture_default_str();
  synth->add_option("--seed", o.seed, "Corpus seed")->required();
  synth->add_option("--label", o.label, "Label stored in the manifest")->capture_default_str();
  synth->add_option("--out", o.out, "Output directory")->required();

  auto* profile = app.add_subcommand("profile", "Azimuthal profiles of a corpus as CSV");
  profile->add_option("--manifest", o.manifest, "Corpus manifest.json");
  profile->add_option("--dir", o.dir, "Directory of .pgm/.png images");
  profile->add_option("--label", o.label, "Label for images read with --dir")->capture_default_str();
  profile->add_option("--mode", o.mode, "binned or interpolated")->capture_default_str();
  profile->add_option("--threads", o.threads, "Worker threads (0: all cores)")->capture_default_str();
  profile->add_option("--out", o.out, "Output CSV (stdout if omitted)");

  auto* stats = app.add_subcommand("stats", "Per-radius mean and std of a profile CSV");
  stats->add_option("input", o.inputs, "Profile CSV")->required();
  stats->add_option("--label", o.label, "Only rows with this label");
  stats->add_option("--out", o.out, "Output CSV (stdout if omitted)");
  stats->add_option("--svg", o.svg, "Plot of mean with a std band");

  auto* sd = app.add_subcommand("sd", "Spectral difference between two profile sets");
  sd->add_option("inputs", o.inputs, "real.csv generated.csv, or one labelled CSV")->required()->expected(1, 2);
  sd->add_option("--scale", o.scale, "log1p or raw")->capture_default_str();

  auto* cs = app.add_subcommand("cs", "Cloaking score of two profile sets");
  cs->add_option("inputs", o.inputs, "real.csv generated.csv, or one labelled CSV")->required()->expected(1, 2);
  cs->add_option("--seed", o.seed, "Subsampling seed")->required();
  cs->add_option("--epochs", o.epochs, "Logistic-regression epochs (0: default)")->capture_default_str();
  cs->add_option("--lr", o.lr, "Logistic-regression step (0: default)")->capture_default_str();
  cs->add_option("--out", o.out, "Result JSON");

  auto* detect = app.add_subcommand("detect", "Held-out detection accuracy of a linear classifier");
  detect->add_option("inputs", o.inputs, "real.csv generated.csv, or one labelled CSV")->required()->expected(1, 2);
  detect->add_option("--model", o.model, "logreg or linsvm")->capture_default_str();
  detect->add_option("--split", o.split, "Training fraction per class")->capture_default_str();
  detect->add_option("--seed", o.seed, "Split seed")->required();
  detect->add_option("--epochs", o.epochs, "Training epochs (0: model default)")->capture_default_str();
  detect->add_option("--lr", o.lr, "Step size (0: model default)")->capture_default_str();
  detect->add_option("--reg", o.reg, "SVM L2 weight")->capture_default_str();
  detect->add_option("--transfer", o.transfer, "Second pair to test the trained model on")->expected(1, 2);
  detect->add_option("--out", o.out, "Result and model JSON");

  auto* cluster = app.add_subcommand("cluster", "k-means on the highest-frequency profile entry");
  cluster->add_option("input", o.inputs, "Profile CSV")->required();
  cluster->add_option("--k", o.k, "Cluster count")->capture_default_str();
  cluster->add_option("--seed", o.seed, "k-means++ seed")->required();
  cluster->add_option("--out", o.out, "Assignment CSV");
  cluster->add_option("--svg", o.svg, "Plot of the cluster mean profiles");

  auto* upsample = app.add_subcommand("upsample-demo", "Spectra of a random signal after 2x up-sampling");
  upsample->add_option("--length", o.length, "Signal length")->capture_default_str();
  upsample->add_option("--seed", o.seed, "Signal seed")->required();
  upsample->add_option("--image", o.image, "Up-sample this image instead of a random signal");
  upsample->add_option("--method", o.method, "Method for --image: bed-of-nails, nearest, bilinear")
      ->capture_default_str();
  upsample->add_option("--out", o.out, "Output CSV, or the output image with --image");
  upsample->add_option("--svg", o.svg, "Plot of the magnitudes");

  auto* train = app.add_subcommand("train", "Train the toy GAN and write a run directory");
  train->add_option("--manifest", o.manifest, "Corpus manifest.json");
  train->add_option("--dir", o.dir, "Directory of .pgm/.png images");
  train->add_option("--loss", o.loss, "dcgan, lsgan, wgan or wgan-gp")->capture_default_str();
  train->add_flag("--spectral", o.spectral, "Add the spectral discriminator");
  train->add_option("--epochs", o.epochs, "Epochs (0: default 10)")->capture_default_str();
  train->add_option("--batch", o.batch, "Batch size")->capture_default_str();
  train->add_option("--lr", o.lr, "Learning rate (0: default 0.0002)")->capture_default_str();
  train->add_option("--gp-lambda", o.gp_lambda, "Gradient-penalty weight")->capture_default_str();
  train->add_option("--clip", o.clip, "WGAN weight clip")->capture_default_str();
  train->add_option("--n-critic", o.n_critic, "D steps per G step (0: loss default)")->capture_default_str();
  train->add_option("--latent-dim", o.latent_dim, "Latent size")->capture_default_str();
  train->add_option("--hidden", o.hidden, "Hidden width")->capture_default_str();
  train->add_option("--image-size", o.image_size, "Image side (0: from the corpus)")->capture_default_str();
  train->add_option("--seed", o.seed, "Run seed")->required();
  train->add_option("--df-scale", o.df_scale, "Spectral discriminator input: log1p or raw")->capture_default_str();
  train->add_option("--df-standardize", o.df_standardize, "Standardize spectral features with real-corpus statistics")
      ->capture_default_str();
  train->add_option("--eval-samples", o.eval_samples, "Samples for per-epoch metrics")->capture_default_str();
  train->add_option("--cs-quick-epochs", o.cs_quick_epochs, "Epochs of the per-epoch CS fit")->capture_default_str();
  train->add_option("--out", o.out, "Run directory")->required();

  auto* report = app.add_subcommand("report", "SD, CS and detection accuracies with a profile plot");
  report->add_option("inputs", o.inputs, "real.csv generated.csv, or one labelled CSV")->required()->expected(1, 2);
  report->add_option("--seed", o.seed, "Seed for subsampling and splits")->required();
  report->add_option("--scale", o.scale, "SD scale: log1p or raw")->capture_default_str();
  report->add_option("--split", o.split, "Training fraction for detection")->capture_default_str();
  report->add_option("--cs-epochs", o.cs_epochs, "Logistic-regression epochs for CS")->capture_default_str();
  report->add_option("--json", o.json_out, "Report JSON");
  report->add_option("--svg", o.svg, "Profile overlay with std bands");
  report->add_option("--y-scale", o.y_scale, "log or linear")->capture_default_str();
  report->add_option("--title", o.title, "Plot title")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    return dispatch(o, *app.get_subcommands().front(), out);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const json::exception& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace specfid::cli
