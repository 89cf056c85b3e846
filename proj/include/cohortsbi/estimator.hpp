#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "cohortsbi/prior.hpp"
#include "cohortsbi/rng.hpp"
#include "cohortsbi/row_matrix.hpp"

namespace cohortsbi {

// Per-dimension affine standardization fitted on a training set. Scales are
// floored (variance floor 1e-12) so constant dimensions stay invertible.
class Standardizer {
 public:
  Standardizer() = default;

  static Standardizer fit(const RowMatrix& data);
  static Standardizer identity(int dim);

  int dim() const { return static_cast<int>(shift_.size()); }
  void transform(std::span<const double> in, std::span<double> out) const;
  void inverse_transform(std::span<const double> in, std::span<double> out) const;

  // Sum of log scales; subtracting it converts a density over standardized
  // coordinates into one over raw coordinates.
  double log_scale_sum() const;

  std::span<const double> shift() const { return shift_; }
  std::span<const double> scale() const { return scale_; }
  static Standardizer from_parts(std::vector<double> shift, std::vector<double> scale);

 private:
  std::vector<double> shift_;
  std::vector<double> scale_;
};

struct MdnConfig {
  int n_components = 10;
  std::vector<int> hidden = {64, 64};
};

struct TrainingOptions {
  int batch_size = 256;
  int atoms = 10;  // M: contrastive set size, true parameter included
  double learning_rate = 5e-4;
  double validation_fraction = 0.1;
  int patience = 20;    // epochs without validation improvement
  int max_epochs = 500;
  double clip_norm = 5.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
};

// Fully connected network mapping a summary vector to the parameters of a
// Gaussian mixture over the (standardized) model parameters: K mixture
// logits, K*D component means, K*D log-scales (diagonal covariance,
// log-scales clamped to [-7, 7]).
class MixtureDensityNetwork {
 public:
  MixtureDensityNetwork() = default;
  MixtureDensityNetwork(int input_dim, int theta_dim, MdnConfig config,
                        std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  int theta_dim() const { return theta_dim_; }
  int n_components() const { return config_.n_components; }
  const std::vector<int>& hidden() const { return config_.hidden; }
  int head_dim() const;

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }

  // Raw head outputs (logits, means, log-scales before clamping) at a
  // standardized input.
  std::vector<double> head(std::span<const double> x_std) const;

  // Internal workspace reused across forward/backward calls.
  struct Workspace {
    std::vector<std::vector<double>> activations;  // hidden outputs
    std::vector<double> head;
    std::vector<double> head_grad;
    std::vector<double> delta_a, delta_b;
  };
  void forward(std::span<const double> x_std, Workspace& ws) const;
  // Accumulates d(loss)/d(params) into grad given d(loss)/d(head).
  void backward(std::span<const double> x_std, const Workspace& ws,
                std::span<const double> head_grad, std::span<double> grad) const;

  static MixtureDensityNetwork from_parts(int input_dim, int theta_dim,
                                          MdnConfig config,
                                          std::vector<double> params);

 private:
  void build_layout();

  int input_dim_ = 0;
  int theta_dim_ = 0;
  MdnConfig config_;
  std::vector<double> params_;
  // per-layer parameter offsets and shapes
  struct Layer {
    int w_offset, b_offset, n_in, n_out;
  };
  std::vector<Layer> layers_;
};

inline constexpr double kLogScaleMin = -7.0;
inline constexpr double kLogScaleMax = 7.0;

// Log density of a standardized target under the mixture head; if
// `head_grad` is non-null also accumulates upstream * d(logq)/d(head).
double mixture_log_prob(std::span<const double> head, int n_components,
                        int theta_dim, std::span<const double> t_std,
                        double upstream = 0.0, std::span<double> head_grad = {});

// Log posterior density of a raw parameter vector given a raw summary
// vector (includes the standardization Jacobian).
double log_prob(const MixtureDensityNetwork& net, const Standardizer& theta_std,
                const Standardizer& x_std, std::span<const double> theta,
                std::span<const double> x);

// Mean atomic contrastive loss over the dataset: every pair competes against
// M-1 other parameters from the same batch re-weighted by the prior, which
// realizes the proposal-corrected posterior as a softmax over atoms. If
// `grad` is non-null it receives d(mean loss)/d(params).
double atomic_apt_loss(const MixtureDensityNetwork& net,
                       const Standardizer& theta_std, const Standardizer& x_std,
                       const RowMatrix& thetas, const RowMatrix& xs,
                       const ParameterPrior& prior, int n_atoms, Rng& rng,
                       std::vector<double>* grad = nullptr);

struct TrainingHistory {
  std::vector<double> train_loss;  // epoch mean over batches
  std::vector<double> val_loss;
  double best_val_loss = 0.0;
  int best_epoch = -1;
  int epochs_run = 0;
};

// Fits the standardizers on the dataset and optimizes the network with Adam,
// gradient clipping and patience-based early stopping; the best-validation
// weights are restored on return. Deterministic given the seed.
TrainingHistory train(MixtureDensityNetwork& net, Standardizer& theta_std,
                      Standardizer& x_std, const RowMatrix& thetas,
                      const RowMatrix& xs, const ParameterPrior& prior,
                      const TrainingOptions& opts, std::uint64_t seed);

struct PosteriorDraws {
  RowMatrix draws;
  double leakage = 0.0;  // rejected / proposed
};

// Draws from the mixture conditioned on x_o, inverse-standardized and
// rejection-filtered to the prior support. Throws LeakageError when the
// acceptance rate over a 1e5-proposal probe falls below 1e-4.
PosteriorDraws sample_posterior(const MixtureDensityNetwork& net,
                                const Standardizer& theta_std,
                                const Standardizer& x_std,
                                std::span<const double> x_o, int n,
                                const ParameterPrior& prior, Rng& rng);

// Text serialization; numbers are written as hex floats so the round trip
// is bit-exact.
void save_estimator(std::ostream& out, const MixtureDensityNetwork& net,
                    const Standardizer& theta_std, const Standardizer& x_std);
struct LoadedEstimator {
  MixtureDensityNetwork net;
  Standardizer theta_std, x_std;
};
LoadedEstimator load_estimator(std::istream& in);

}  // namespace cohortsbi
