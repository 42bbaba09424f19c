#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "specfid/autodiff.hpp"
#include "specfid/image.hpp"
#include "specfid/rng.hpp"
#include "specfid/spectrum.hpp"

/// Desk-scale adversarial training with a spatial discriminator and a 1D
/// spectral discriminator.
///
/// Generator and spatial discriminator are small multilayer perceptrons that
/// stand in for convolutional networks; the spectral discriminator is exact:
/// DFT as fixed matrices, power, ring binning, one affine unit.
namespace specfid::gan {

enum class LossKind { kDcgan, kLsgan, kWgan, kWganGp };
enum class Activation { kNone, kRelu, kLeakyRelu, kTanh, kSigmoid };
enum class DfScale { kRaw, kLog1p };
enum class OptimizerKind { kAdam, kRmsprop };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view text);
std::string to_string(DfScale scale);
DfScale parse_df_scale(std::string_view text);

/// Wasserstein critics emit raw scores; the other losses use a sigmoid head.
inline bool uses_sigmoid(LossKind kind) { return kind == LossKind::kDcgan || kind == LossKind::kLsgan; }

// ---- networks --------------------------------------------------------------

struct MlpNet {
  std::vector<std::size_t> sizes;
  std::vector<Activation> activations;
  /// weights[i] is sizes[i] x sizes[i+1]; biases[i] is 1 x sizes[i+1].
  std::vector<ad::Tensor> weights;
  std::vector<ad::Tensor> biases;

  /// Weights ~ N(0, 1/fan_in), zero biases.
  static MlpNet create(std::vector<std::size_t> sizes, std::vector<Activation> activations, Rng& rng);

  std::size_t input_dim() const { return sizes.front(); }
  std::size_t output_dim() const { return sizes.back(); }
  std::size_t parameter_count() const;
  /// Weights and biases interleaved per layer.
  std::vector<ad::Tensor*> parameters();
  std::vector<const ad::Tensor*> parameters() const;
};

/// Parameters of a network placed on a tape.
struct Bound {
  std::vector<ad::Var> params;
};

Bound bind(const MlpNet& net, ad::Tape& tape, bool trainable);
ad::Var apply(const MlpNet& net, const Bound& bound, ad::Var input);

/// Spectral discriminator: images (rows of n*n pixels in [0,1]) ->
/// |DFT|^2 -> ring sums -> optional log1p -> fixed per-ring standardization
/// -> affine -> optional sigmoid. Only the L ring weights and the bias are
/// trainable; the standardization is the identity until set.
class SpectralHead {
 public:
  SpectralHead(std::size_t n, bool sigmoid_output, DfScale scale = DfScale::kLog1p);

  std::size_t n() const { return n_; }
  std::size_t profile_length() const { return length_; }
  std::size_t parameter_count() const { return weights_.size() + bias_.size(); }
  bool sigmoid_output() const { return sigmoid_; }
  DfScale scale() const { return scale_; }

  /// C[(m,p),(k,l)] = cos(2 pi (mk + pl) / n); symmetric, so rows work as columns.
  const ad::Tensor& dft_cos() const { return dft_cos_; }
  /// S[(m,p),(k,l)] = sin(2 pi (mk + pl) / n).
  const ad::Tensor& dft_sin() const { return dft_sin_; }
  /// L x n^2 matrix with a one where bin (k,l) belongs to ring r.
  const ad::Tensor& ring_matrix() const { return ring_; }

  ad::Tensor& weights() { return weights_; }
  const ad::Tensor& weights() const { return weights_; }
  ad::Tensor& bias() { return bias_; }
  const ad::Tensor& bias() const { return bias_; }
  std::vector<ad::Tensor*> parameters() { return {&weights_, &bias_}; }

  /// Fixed feature standardization (x - mean) / std after the optional log1p.
  /// Standard deviations below 1e-12 count as 1.
  void set_standardization(const std::vector<double>& mean, const std::vector<double>& std);
  const ad::Tensor& feature_shift() const { return shift_; }
  const ad::Tensor& feature_inv_scale() const { return inv_scale_; }

  struct BoundHead {
    ad::Var dft_cos, dft_sin, ring_t, weights, bias, shift, inv_scale;
  };
  BoundHead bind(ad::Tape& tape, bool trainable) const;

  /// Differentiable profile of each image row (B x L).
  ad::Var profile(ad::Tape& tape, const BoundHead& bound, ad::Var images) const;
  /// Realness score per row (B x 1) from a profile batch.
  ad::Var score_from_profile(ad::Tape& tape, const BoundHead& bound, ad::Var profile) const;
  /// Full differentiable chain: images -> scores.
  ad::Var forward(ad::Tape& tape, const BoundHead& bound, ad::Var images) const;

 private:
  std::size_t n_;
  std::size_t length_;
  bool sigmoid_;
  DfScale scale_;
  ad::Tensor dft_cos_, dft_sin_, ring_, ring_t_;
  ad::Tensor shift_, inv_scale_;
  ad::Tensor weights_, bias_;
};

/// Binned azimuthal profiles of image rows computed with the FFT, as a B x L
/// tensor; equal to SpectralHead::profile for inputs that need no gradient.
ad::Tensor fft_profiles(const ad::Tensor& images, std::size_t n);

// ---- losses ----------------------------------------------------------------

/// Discriminator loss for one branch. `gradient_penalty` must be given iff
/// kind is wgan-gp; it is added unchanged.
ad::Var loss_d(ad::Tape& tape, LossKind kind, ad::Var real_scores, ad::Var fake_scores,
               std::optional<ad::Var> gradient_penalty = std::nullopt);

/// Generator loss for one branch.
ad::Var loss_g_branch(ad::Tape& tape, LossKind kind, ad::Var fake_scores);

/// Spatial branch alone, or the average of spatial and frequency branches.
ad::Var loss_g(ad::Tape& tape, LossKind kind, ad::Var spatial_fake, std::optional<ad::Var> spectral_fake, bool spectral);

/// lambda * mean((|grad_x critic(x~)|_2 - 1)^2) with x~ = alpha x + (1 - alpha) x^
/// and one alpha ~ U(0,1) per row. The gradient stays on the tape.
template <typename Critic>
ad::Var gradient_penalty(ad::Tape& tape, Critic&& critic, const ad::Tensor& real, const ad::Tensor& fake,
                         double lambda, Rng& rng) {
  ad::Tensor mixed(real.rows(), real.cols());
  for (std::size_t i = 0; i < real.rows(); ++i) {
    const double alpha = rng.uniform();
    for (std::size_t j = 0; j < real.cols(); ++j) mixed(i, j) = alpha * real(i, j) + (1.0 - alpha) * fake(i, j);
  }
  const ad::Var x = tape.leaf(std::move(mixed), true);
  tape.backward(tape.sum(critic(x)), true);
  const ad::Var g = tape.grad_var(x);
  const ad::Var norm = tape.sqrt_eps(tape.row_sums(tape.square(g)));
  return tape.scale(tape.mean(tape.square(tape.add_scalar(norm, -1.0))), lambda);
}

// ---- optimizers ------------------------------------------------------------

/// Adam (beta1 0.5, beta2 0.999) or RMSprop (alpha 0.99); one state per network.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, double beta1 = 0.5, double beta2 = 0.999);
  void step(const std::vector<ad::Tensor*>& params, const std::vector<ad::Tensor>& grads);
  OptimizerKind kind() const { return kind_; }

 private:
  OptimizerKind kind_;
  double lr_, beta1_, beta2_;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<ad::Tensor> m_, v_;
};

// ---- training --------------------------------------------------------------

struct TrainConfig {
  LossKind loss = LossKind::kDcgan;
  bool spectral = false;
  int epochs = 10;
  std::size_t batch = 128;
  double lr = 0.0002;
  double gp_lambda = 10.0;
  double clip = 0.01;
  /// 0 selects the default: 1 for dcgan/lsgan, 5 for the Wasserstein losses.
  int n_critic = 0;
  std::size_t latent_dim = 32;
  std::size_t hidden = 128;
  std::size_t image_size = 16;
  std::uint64_t seed = 0;
  DfScale df_scale = DfScale::kLog1p;
  /// Standardize the spectral discriminator's features with the per-ring
  /// mean and std of the real corpus.
  bool df_standardize = true;
  /// Generated samples used for the per-epoch metrics.
  std::size_t eval_samples = 256;
  int cs_quick_epochs = 100;

  OptimizerKind optimizer() const { return loss == LossKind::kWgan ? OptimizerKind::kRmsprop : OptimizerKind::kAdam; }
  int critic_steps() const;
  void validate() const;
};

nlohmann::ordered_json to_json(const TrainConfig& config);
/// Overrides fields of `base` present in `j`.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct EpochLog {
  int epoch = 0;
  double sd = 0.0;
  double cs_quick = 0.0;
  double d_s_loss = 0.0;
  double d_f_loss = 0.0;
  double g_loss = 0.0;
};

struct RunLog {
  std::vector<EpochLog> rows;
  std::string sample_dir;
};

struct TrainResult {
  RunLog log;
  MlpNet generator;
  MlpNet d_spatial;
  std::optional<SpectralHead> d_frequency;
  /// Next draw of the main random stream after training; equal with and
  /// without the spectral discriminator.
  std::uint64_t main_stream_fingerprint = 0;
};

MlpNet make_generator(const TrainConfig& config, Rng& rng);
MlpNet make_spatial_discriminator(const TrainConfig& config, Rng& rng);

/// Generator output for a latent batch: B x n*n values in (-1, 1).
ad::Var generator_forward(const MlpNet& generator, const Bound& bound, ad::Tape& tape, ad::Var latent);
ad::Tensor generate(const MlpNet& generator, const ad::Tensor& latent);
/// Standard-normal latent batch.
ad::Tensor sample_latent(std::size_t batch, std::size_t dim, Rng& rng);

/// Generator rows in (-1,1) -> images in [0,1].
std::vector<Image> to_images(const ad::Tensor& rows, std::size_t n);

/// Trains on a corpus of n x n images. With `run_dir`, writes config.json,
/// log.csv, samples/NNNN.png and model.json there.
TrainResult train(const TrainConfig& config, const std::vector<Image>& corpus,
                  const std::optional<std::filesystem::path>& run_dir = std::nullopt);

/// Profiles of `count` fresh generator samples drawn with `seed`.
std::vector<SpectralProfile> sample_profiles(const MlpNet& generator, std::size_t count, std::size_t n,
                                             std::uint64_t seed);

}  // namespace specfid::gan
