#include "specfid/ganlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>

#include "specfid/errors.hpp"
#include "specfid/fidelity.hpp"
#include "specfid/profile_io.hpp"

namespace specfid::gan {

using ad::Tape;
using ad::Tensor;
using ad::Var;

// ---- enums -----------------------------------------------------------------

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kDcgan: return "dcgan";
    case LossKind::kLsgan: return "lsgan";
    case LossKind::kWgan: return "wgan";
    case LossKind::kWganGp: return "wgan-gp";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view text) {
  for (auto k : {LossKind::kDcgan, LossKind::kLsgan, LossKind::kWgan, LossKind::kWganGp})
    if (to_string(k) == text) return k;
  throw UsageError("unknown loss '" + std::string(text) + "'");
}

std::string to_string(DfScale scale) { return scale == DfScale::kLog1p ? "log1p" : "raw"; }

DfScale parse_df_scale(std::string_view text) {
  if (text == "log1p") return DfScale::kLog1p;
  if (text == "raw") return DfScale::kRaw;
  throw UsageError("unknown D_F scale '" + std::string(text) + "'");
}

namespace {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kNone: return "none";
    case Activation::kRelu: return "relu";
    case Activation::kLeakyRelu: return "leaky_relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "?";
}

Var activate(Tape& t, Activation a, Var x) {
  switch (a) {
    case Activation::kNone: return x;
    case Activation::kRelu: return t.relu(x);
    case Activation::kLeakyRelu: return t.leaky_relu(x);
    case Activation::kTanh: return t.tanh(x);
    case Activation::kSigmoid: return t.sigmoid(x);
  }
  return x;
}

}  // namespace

// ---- MlpNet ----------------------------------------------------------------

MlpNet MlpNet::create(std::vector<std::size_t> sizes, std::vector<Activation> activations, Rng& rng) {
  if (sizes.size() < 2 || activations.size() != sizes.size() - 1) throw UsageError("MLP needs one activation per layer");
  MlpNet net;
  net.sizes = std::move(sizes);
  net.activations = std::move(activations);
  for (std::size_t l = 0; l + 1 < net.sizes.size(); ++l) {
    const std::size_t in = net.sizes[l], out = net.sizes[l + 1];
    if (in == 0 || out == 0) throw UsageError("MLP layer sizes must be positive");
    Tensor w(in, out);
    const double sd = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& v : w.data()) v = rng.normal(0.0, sd);
    net.weights.push_back(std::move(w));
    net.biases.emplace_back(1, out);
  }
  return net;
}

std::size_t MlpNet::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) count += weights[l].size() + biases[l].size();
  return count;
}

std::vector<Tensor*> MlpNet::parameters() {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

std::vector<const Tensor*> MlpNet::parameters() const {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(&weights[l]);
    out.push_back(&biases[l]);
  }
  return out;
}

Bound bind(const MlpNet& net, Tape& tape, bool trainable) {
  Bound b;
  for (const Tensor* p : net.parameters()) b.params.push_back(tape.leaf(*p, trainable));
  return b;
}

Var apply(const MlpNet& net, const Bound& bound, Var input) {
  Tape& t = *input.tape;
  if (input.cols() != net.input_dim()) throw UsageError("MLP input dimension mismatch");
  Var x = input;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    x = activate(t, net.activations[l], t.affine(x, bound.params[2 * l], bound.params[2 * l + 1]));
  }
  return x;
}

// ---- SpectralHead ----------------------------------------------------------

SpectralHead::SpectralHead(std::size_t n, bool sigmoid_output, DfScale scale)
    : n_(n), length_(specfid::profile_length(n)), sigmoid_(sigmoid_output), scale_(scale) {
  if (n < 2) throw UsageError("spectral head needs n >= 2");
  const std::size_t d = n * n;
  dft_cos_ = Tensor(d, d);
  dft_sin_ = Tensor(d, d);
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
          const std::size_t phase = (m * k + p * l) % n;
          const double angle = 2.0 * std::numbers::pi * static_cast<double>(phase) / static_cast<double>(n);
          dft_cos_(m * n + p, k * n + l) = std::cos(angle);
          dft_sin_(m * n + p, k * n + l) = std::sin(angle);
        }
      }
    }
  }
  ring_ = Tensor(length_, d);
  ring_t_ = Tensor(d, length_);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      const std::size_t r = ring_of_bin(k, l, n);
      ring_(r, k * n + l) = 1.0;
      ring_t_(k * n + l, r) = 1.0;
    }
  }
  shift_ = Tensor(1, length_);
  inv_scale_ = Tensor(1, length_, 1.0);
  weights_ = Tensor(length_, 1);
  bias_ = Tensor(1, 1);
}

void SpectralHead::set_standardization(const std::vector<double>& mean, const std::vector<double>& std) {
  if (mean.size() != length_ || std.size() != length_) throw UsageError("spectral head: standardization length mismatch");
  for (std::size_t r = 0; r < length_; ++r) {
    if (!std::isfinite(mean[r]) || !std::isfinite(std[r])) throw NumericError("spectral head: non-finite standardization");
    shift_[r] = -mean[r];
    inv_scale_[r] = std[r] < 1e-12 ? 1.0 : 1.0 / std[r];
  }
}

SpectralHead::BoundHead SpectralHead::bind(Tape& tape, bool trainable) const {
  return {tape.constant(dft_cos_), tape.constant(dft_sin_), tape.constant(ring_t_), tape.leaf(weights_, trainable),
          tape.leaf(bias_, trainable),   tape.constant(shift_),   tape.constant(inv_scale_)};
}

Var SpectralHead::profile(Tape& tape, const BoundHead& b, Var images) const {
  if (images.cols() != n_ * n_) throw UsageError("spectral head: image size does not match the head");
  const Var re = tape.matmul(images, b.dft_cos);
  const Var im = tape.matmul(images, b.dft_sin);
  const Var power = tape.add(tape.square(re), tape.square(im));
  return tape.matmul(power, b.ring_t);
}

Var SpectralHead::score_from_profile(Tape& tape, const BoundHead& b, Var profile) const {
  if (profile.cols() != length_) throw UsageError("spectral head: profile length mismatch");
  const Var scaled = scale_ == DfScale::kLog1p ? tape.log1p(profile) : profile;
  const Var features =
      tape.mul(tape.add_bias(scaled, b.shift), tape.broadcast_rows(b.inv_scale, profile.rows()));
  const Var z = tape.affine(features, b.weights, b.bias);
  return sigmoid_ ? tape.sigmoid(z) : z;
}

Var SpectralHead::forward(Tape& tape, const BoundHead& b, Var images) const {
  return score_from_profile(tape, b, profile(tape, b, images));
}

Tensor fft_profiles(const Tensor& images, std::size_t n) {
  if (images.cols() != n * n) throw UsageError("fft_profiles: image size mismatch");
  const std::size_t length = specfid::profile_length(n);
  Tensor out(images.rows(), length);
  for (std::size_t i = 0; i < images.rows(); ++i) {
    RealGrid grid{n, n, {images.data().begin() + static_cast<std::ptrdiff_t>(i * n * n),
                         images.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * n * n)}};
    const auto p = azimuthal_integral(grid, AzimuthalMode::kBinned);
    for (std::size_t r = 0; r < length; ++r) out(i, r) = p.values[r];
  }
  return out;
}

// ---- losses ----------------------------------------------------------------

Var loss_d(Tape& t, LossKind kind, Var real, Var fake, std::optional<Var> gradient_penalty) {
  if ((kind == LossKind::kWganGp) != gradient_penalty.has_value()) {
    throw UsageError("a gradient penalty is required for wgan-gp and only for wgan-gp");
  }
  switch (kind) {
    case LossKind::kDcgan: {
      const Var real_term = t.mean(t.log_eps(real));
      const Var fake_term = t.mean(t.log_eps(t.add_scalar(t.neg(fake), 1.0)));
      return t.neg(t.add(real_term, fake_term));
    }
    case LossKind::kLsgan:
      return t.add(t.mean(t.square(t.add_scalar(real, -1.0))), t.mean(t.square(fake)));
    case LossKind::kWgan:
      return t.sub(t.mean(fake), t.mean(real));
    case LossKind::kWganGp:
      return t.add(t.sub(t.mean(fake), t.mean(real)), *gradient_penalty);
  }
  throw UsageError("unknown loss");
}

Var loss_g_branch(Tape& t, LossKind kind, Var fake) {
  switch (kind) {
    case LossKind::kDcgan: return t.neg(t.mean(t.log_eps(fake)));
    case LossKind::kLsgan: return t.mean(t.square(t.add_scalar(fake, -1.0)));
    case LossKind::kWgan:
    case LossKind::kWganGp: return t.neg(t.mean(fake));
  }
  throw UsageError("unknown loss");
}

Var loss_g(Tape& t, LossKind kind, Var spatial_fake, std::optional<Var> spectral_fake, bool spectral) {
  const Var spatial = loss_g_branch(t, kind, spatial_fake);
  if (!spectral) return spatial;
  if (!spectral_fake) throw UsageError("spectral generator loss needs D_F scores");
  return t.scale(t.add(spatial, loss_g_branch(t, kind, *spectral_fake)), 0.5);
}

// ---- optimizer -------------------------------------------------------------

Optimizer::Optimizer(OptimizerKind kind, double lr, double beta1, double beta2)
    : kind_(kind), lr_(lr), beta1_(beta1), beta2_(beta2) {}

void Optimizer::step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
  if (params.size() != grads.size()) throw UsageError("optimizer: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  constexpr double kRmsAlpha = 0.99;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (!g.same_shape(p)) throw UsageError("optimizer: gradient shape mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (kind_ == OptimizerKind::kAdam) {
        m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
        v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
        p[j] -= lr_ * (m_[i][j] / bc1) / (std::sqrt(v_[i][j] / bc2) + eps_);
      } else {
        v_[i][j] = kRmsAlpha * v_[i][j] + (1.0 - kRmsAlpha) * g[j] * g[j];
        p[j] -= lr_ * g[j] / (std::sqrt(v_[i][j]) + eps_);
      }
    }
  }
}

// ---- config ----------------------------------------------------------------

int TrainConfig::critic_steps() const {
  if (n_critic > 0) return n_critic;
  return (loss == LossKind::kWgan || loss == LossKind::kWganGp) ? 5 : 1;
}

void TrainConfig::validate() const {
  if (batch < 2) throw UsageError("batch must be >= 2");
  if (image_size < 2 || !is_power_of_two(image_size)) throw UsageError("image size must be a power of two >= 2");
  if (gp_lambda < 0.0) throw UsageError("gp lambda must be >= 0");
  if (epochs < 0) throw UsageError("epochs must be >= 0");
  if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
  if (latent_dim == 0 || hidden == 0) throw UsageError("latent and hidden sizes must be positive");
  if (!(clip > 0.0)) throw UsageError("clip must be positive");
  if (eval_samples < 2) throw UsageError("eval_samples must be >= 2");
  if (n_critic < 0) throw UsageError("n_critic must be >= 0");
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["loss"] = to_string(c.loss);
  j["spectral"] = c.spectral;
  j["epochs"] = c.epochs;
  j["batch"] = c.batch;
  j["lr"] = c.lr;
  j["optimizer"] = c.optimizer() == OptimizerKind::kAdam ? "adam" : "rmsprop";
  j["gp_lambda"] = c.gp_lambda;
  j["clip"] = c.clip;
  j["n_critic"] = c.critic_steps();
  j["latent_dim"] = c.latent_dim;
  j["hidden"] = c.hidden;
  j["image_size"] = c.image_size;
  j["seed"] = c.seed;
  j["df_scale"] = to_string(c.df_scale);
  j["df_standardize"] = c.df_standardize;
  j["eval_samples"] = c.eval_samples;
  j["cs_quick_epochs"] = c.cs_quick_epochs;
  return j;
}

TrainConfig config_from_json(const nlohmann::json& j, TrainConfig c) {
  try {
    if (j.contains("loss")) c.loss = parse_loss_kind(j["loss"].get<std::string>());
    if (j.contains("spectral")) c.spectral = j["spectral"].get<bool>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("batch")) c.batch = j["batch"].get<std::size_t>();
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("gp_lambda")) c.gp_lambda = j["gp_lambda"].get<double>();
    if (j.contains("clip")) c.clip = j["clip"].get<double>();
    if (j.contains("n_critic")) c.n_critic = j["n_critic"].get<int>();
    if (j.contains("latent_dim")) c.latent_dim = j["latent_dim"].get<std::size_t>();
    if (j.contains("hidden")) c.hidden = j["hidden"].get<std::size_t>();
    if (j.contains("image_size")) c.image_size = j["image_size"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("df_scale")) c.df_scale = parse_df_scale(j["df_scale"].get<std::string>());
    if (j.contains("df_standardize")) c.df_standardize = j["df_standardize"].get<bool>();
    if (j.contains("eval_samples")) c.eval_samples = j["eval_samples"].get<std::size_t>();
    if (j.contains("cs_quick_epochs")) c.cs_quick_epochs = j["cs_quick_epochs"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad training config: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("bad training config: ") + e.what());
  }
  return c;
}

// ---- generator helpers -----------------------------------------------------

MlpNet make_generator(const TrainConfig& c, Rng& rng) {
  return MlpNet::create({c.latent_dim, c.hidden, c.hidden, c.image_size * c.image_size},
                        {Activation::kLeakyRelu, Activation::kLeakyRelu, Activation::kTanh}, rng);
}

MlpNet make_spatial_discriminator(const TrainConfig& c, Rng& rng) {
  return MlpNet::create({c.image_size * c.image_size, c.hidden, 1},
                        {Activation::kLeakyRelu, uses_sigmoid(c.loss) ? Activation::kSigmoid : Activation::kNone}, rng);
}

Var generator_forward(const MlpNet& generator, const Bound& bound, Tape& tape, Var latent) {
  (void)tape;
  if (latent.cols() != generator.input_dim()) throw UsageError("latent dimension does not match the generator");
  return apply(generator, bound, latent);
}

Tensor generate(const MlpNet& generator, const Tensor& latent) {
  Tape tape;
  const auto b = bind(generator, tape, false);
  return generator_forward(generator, b, tape, tape.constant(latent)).value();
}

Tensor sample_latent(std::size_t batch, std::size_t dim, Rng& rng) {
  Tensor z(batch, dim);
  for (double& v : z.data()) v = rng.normal();
  return z;
}

std::vector<Image> to_images(const Tensor& rows, std::size_t n) {
  if (rows.cols() != n * n) throw UsageError("to_images: row length mismatch");
  std::vector<Image> out;
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    std::vector<double> px(n * n);
    for (std::size_t j = 0; j < px.size(); ++j) px[j] = 0.5 * (rows(i, j) + 1.0);
    out.push_back(Image::clamped(n, n, std::move(px)));
  }
  return out;
}

namespace {

Tensor to_unit_range(const Tensor& rows) {
  Tensor out(rows.rows(), rows.cols());
  for (std::size_t j = 0; j < rows.size(); ++j) out[j] = 0.5 * (rows[j] + 1.0);
  return out;
}

std::vector<SpectralProfile> rows_to_profiles(const Tensor& profiles, std::size_t n) {
  std::vector<SpectralProfile> out(profiles.rows());
  for (std::size_t i = 0; i < profiles.rows(); ++i) {
    out[i].n = n;
    out[i].values.assign(profiles.data().begin() + static_cast<std::ptrdiff_t>(i * profiles.cols()),
                         profiles.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * profiles.cols()));
  }
  return out;
}

Tensor gather_rows(const Tensor& source, const std::vector<std::size_t>& order, std::size_t start, std::size_t count) {
  Tensor out(count, source.cols());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t src = order[start + i];
    std::copy_n(source.data().begin() + static_cast<std::ptrdiff_t>(src * source.cols()), source.cols(),
                out.data().begin() + static_cast<std::ptrdiff_t>(i * source.cols()));
  }
  return out;
}

std::vector<Tensor> collect_grads(const Tape& tape, const std::vector<Var>& params) {
  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (const Var& p : params) grads.push_back(tape.grad(p));
  return grads;
}

void clip_all(const std::vector<Tensor*>& params, double clip) {
  for (Tensor* p : params)
    for (double& v : p->data()) v = std::clamp(v, -clip, clip);
}

nlohmann::ordered_json net_to_json(const MlpNet& net) {
  nlohmann::ordered_json j;
  j["sizes"] = net.sizes;
  std::vector<std::string> acts;
  for (auto a : net.activations) acts.push_back(to_string(a));
  j["activations"] = acts;
  std::vector<double> flat;
  for (const Tensor* p : net.parameters()) flat.insert(flat.end(), p->data().begin(), p->data().end());
  j["parameters"] = flat;
  return j;
}

void write_run_dir(const std::filesystem::path& dir, const TrainConfig& config, const TrainResult& result,
                   const Tensor& eval_rows) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "samples", ec);
  if (ec) throw DataError("cannot create run directory " + dir.string() + ": " + ec.message());

  {
    std::ofstream out(dir / "config.json");
    out << to_json(config).dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "log.csv", std::ios::binary);
    out << "epoch,sd,cs_quick,d_s_loss,d_f_loss,g_loss\n";
    for (const auto& r : result.log.rows) {
      out << r.epoch << ',' << format_double(r.sd) << ',' << format_double(r.cs_quick) << ','
          << format_double(r.d_s_loss) << ',' << format_double(r.d_f_loss) << ',' << format_double(r.g_loss) << '\n';
    }
  }
  const auto images = to_images(eval_rows, config.image_size);
  const std::size_t count = std::min<std::size_t>(images.size(), 64);
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%04zu.png", i);
    save_png(images[i], dir / "samples" / name);
  }
  {
    nlohmann::ordered_json j;
    j["generator"] = net_to_json(result.generator);
    j["d_spatial"] = net_to_json(result.d_spatial);
    if (result.d_frequency) {
      const auto& head = *result.d_frequency;
      j["d_frequency"] = {{"n", head.n()},
                          {"weights", std::vector<double>(head.weights().data().begin(), head.weights().data().end())},
                          {"bias", head.bias().item()},
                          {"sigmoid", head.sigmoid_output()},
                          {"scale", to_string(head.scale())},
                          {"feature_shift", std::vector<double>(head.feature_shift().data().begin(),
                                                                head.feature_shift().data().end())},
                          {"feature_inv_scale", std::vector<double>(head.feature_inv_scale().data().begin(),
                                                                    head.feature_inv_scale().data().end())}};
    }
    std::ofstream out(dir / "model.json");
    out << j.dump(2) << '\n';
  }
}

}  // namespace

std::vector<SpectralProfile> sample_profiles(const MlpNet& generator, std::size_t count, std::size_t n,
                                             std::uint64_t seed) {
  Rng rng(seed);
  const Tensor rows = generate(generator, sample_latent(count, generator.input_dim(), rng));
  return rows_to_profiles(fft_profiles(to_unit_range(rows), n), n);
}

// ---- training loop ---------------------------------------------------------

TrainResult train(const TrainConfig& config, const std::vector<Image>& corpus,
                  const std::optional<std::filesystem::path>& run_dir) {
  config.validate();
  if (corpus.empty()) throw UsageError("training corpus is empty");
  const std::size_t n = config.image_size;
  const std::size_t d = n * n;
  for (const auto& img : corpus) {
    if (img.height() != n || img.width() != n) throw DataError("corpus image size does not match image_size");
  }

  // Independent streams: D_F draws never touch the main stream.
  const Rng master(config.seed);
  Rng init_rng = master.substream(1);
  Rng main_rng = master.substream(2);
  Rng eval_rng = master.substream(3);
  Rng df_rng = master.substream(4);

  TrainResult result;
  result.generator = make_generator(config, init_rng);
  result.d_spatial = make_spatial_discriminator(config, init_rng);
  if (config.spectral) result.d_frequency.emplace(n, uses_sigmoid(config.loss), config.df_scale);

  Optimizer opt_g(config.optimizer(), config.lr);
  Optimizer opt_ds(config.optimizer(), config.lr);
  Optimizer opt_df(config.optimizer(), config.lr);

  const std::size_t count = corpus.size();
  Tensor real_unit(count, d), real_signed(count, d);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      real_unit(i, j) = corpus[i].pixels()[j];
      real_signed(i, j) = 2.0 * corpus[i].pixels()[j] - 1.0;
    }
  }
  const Tensor real_profile_rows = fft_profiles(real_unit, n);
  const auto real_profiles = rows_to_profiles(real_profile_rows, n);
  if (result.d_frequency && config.df_standardize) {
    const std::size_t len = real_profile_rows.cols();
    std::vector<double> mean(len, 0.0), sd(len, 0.0);
    auto feature = [&](std::size_t i, std::size_t r) {
      const double v = real_profile_rows(i, r);
      return config.df_scale == DfScale::kLog1p ? std::log1p(v) : v;
    };
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t r = 0; r < len; ++r) mean[r] += feature(i, r);
    for (double& m : mean) m /= static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t r = 0; r < len; ++r) sd[r] += (feature(i, r) - mean[r]) * (feature(i, r) - mean[r]);
    for (double& v : sd) v = std::sqrt(v / static_cast<double>(count));
    result.d_frequency->set_standardization(mean, sd);
  }
  const Tensor eval_latent = sample_latent(config.eval_samples, config.latent_dim, eval_rng);

  const std::size_t batch = std::min(config.batch, count);
  const std::size_t steps = std::max<std::size_t>(1, count / batch);
  const int critic_steps = config.critic_steps();
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  long global_step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    main_rng.shuffle(order);
    double ds_sum = 0.0, df_sum = 0.0, g_sum = 0.0;
    std::size_t g_steps = 0;

    for (std::size_t step = 0; step < steps; ++step) {
      try {
        const Tensor x_signed = gather_rows(real_signed, order, step * batch, batch);
        const Tensor latent = sample_latent(batch, config.latent_dim, main_rng);
        const Tensor fake_signed = generate(result.generator, latent);

        {
          Tape t;
          const auto b = bind(result.d_spatial, t, true);
          const Var real_s = apply(result.d_spatial, b, t.constant(x_signed));
          const Var fake_s = apply(result.d_spatial, b, t.constant(fake_signed));
          std::optional<Var> gp;
          if (config.loss == LossKind::kWganGp) {
            gp = gradient_penalty(t, [&](Var x) { return apply(result.d_spatial, b, x); }, x_signed, fake_signed,
                                  config.gp_lambda, main_rng);
          }
          const Var loss = loss_d(t, config.loss, real_s, fake_s, gp);
          ds_sum += loss.value().item();
          t.backward(loss);
          opt_ds.step(result.d_spatial.parameters(), collect_grads(t, b.params));
          if (config.loss == LossKind::kWgan) clip_all(result.d_spatial.parameters(), config.clip);
        }

        if (config.spectral) {
          auto& head = *result.d_frequency;
          const Tensor x_unit = gather_rows(real_unit, order, step * batch, batch);
          const Tensor fake_unit = to_unit_range(fake_signed);
          Tape t;
          const auto b = head.bind(t, true);
          // Detached inputs: their profiles come from the FFT path.
          const Var real_s = head.score_from_profile(t, b, t.constant(gather_rows(real_profile_rows, order, step * batch, batch)));
          const Var fake_s = head.score_from_profile(t, b, t.constant(fft_profiles(fake_unit, n)));
          std::optional<Var> gp;
          if (config.loss == LossKind::kWganGp) {
            gp = gradient_penalty(t, [&](Var x) { return head.forward(t, b, x); }, x_unit, fake_unit,
                                  config.gp_lambda, df_rng);
          }
          const Var loss = loss_d(t, config.loss, real_s, fake_s, gp);
          df_sum += loss.value().item();
          t.backward(loss);
          opt_df.step(head.parameters(), collect_grads(t, {b.weights, b.bias}));
          if (config.loss == LossKind::kWgan) clip_all(head.parameters(), config.clip);
        }

        ++global_step;
        if (global_step % critic_steps == 0) {
          Tape t;
          const auto gb = bind(result.generator, t, true);
          const Var fake = generator_forward(result.generator, gb, t, t.constant(latent));
          const auto db = bind(result.d_spatial, t, false);
          const Var spatial = apply(result.d_spatial, db, fake);
          std::optional<Var> spectral;
          if (config.spectral) {
            const auto& head = *result.d_frequency;
            const auto hb = head.bind(t, false);
            spectral = head.forward(t, hb, t.add_scalar(t.scale(fake, 0.5), 0.5));
          }
          const Var loss = loss_g(t, config.loss, spatial, spectral, config.spectral);
          g_sum += loss.value().item();
          ++g_steps;
          t.backward(loss);
          opt_g.step(result.generator.parameters(), collect_grads(t, gb.params));
        }
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
                           ": " + e.what());
      }
    }

    const Tensor eval_rows = generate(result.generator, eval_latent);
    const auto gen_profiles = rows_to_profiles(fft_profiles(to_unit_range(eval_rows), n), n);
    EpochLog row;
    row.epoch = epoch + 1;
    row.sd = spectral_difference(real_profiles, gen_profiles);
    row.cs_quick = evaluate_cs(real_profiles, gen_profiles, {config.cs_quick_epochs, 0.1, config.seed}).cs;
    row.d_s_loss = ds_sum / static_cast<double>(steps);
    row.d_f_loss = config.spectral ? df_sum / static_cast<double>(steps) : 0.0;
    row.g_loss = g_steps > 0 ? g_sum / static_cast<double>(g_steps) : 0.0;
    for (double v : {row.sd, row.cs_quick, row.d_s_loss, row.d_f_loss, row.g_loss}) {
      if (!std::isfinite(v)) throw NumericError("non-finite metric at epoch " + std::to_string(epoch));
    }
    result.log.rows.push_back(row);
  }

  Rng probe = main_rng;
  result.main_stream_fingerprint = probe.next_u64();

  if (run_dir) {
    result.log.sample_dir = (*run_dir / "samples").string();
    write_run_dir(*run_dir, config, result, generate(result.generator, eval_latent));
  }
  return result;
}

}  // namespace specfid::gan
