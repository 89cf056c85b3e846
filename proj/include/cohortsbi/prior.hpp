#pragma once

#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cohortsbi/rng.hpp"

namespace cohortsbi {

struct GammaMarginal {
  double shape, rate;
};
struct UniformMarginal {
  double lo, hi;
};
struct BetaMarginal {
  double a, b;
};
// Piecewise-constant density over contiguous bins; masses normalized.
struct EmpiricalMarginal {
  std::vector<double> edges;
  std::vector<double> masses;
};

// One univariate prior. Construction validates hyperparameters and
// normalizes empirical masses.
class MarginalPrior {
 public:
  using Family =
      std::variant<GammaMarginal, UniformMarginal, BetaMarginal, EmpiricalMarginal>;

  explicit MarginalPrior(Family family);

  double sample(Rng& rng) const;
  double log_density(double x) const;  // -inf outside support
  bool in_support(double x) const;
  double mean() const;
  double stddev() const;
  std::pair<double, double> support() const;  // hi may be +inf

  const Family& family() const { return family_; }
  std::string family_name() const;

 private:
  Family family_;
};

// Abstract parameter distribution consumed by the estimator and the
// inference loop. Production code uses Prior; tests may substitute analytic
// distributions (e.g. a Gaussian for conjugate oracles).
class ParameterPrior {
 public:
  virtual ~ParameterPrior() = default;
  virtual int dim() const = 0;
  virtual double log_density(std::span<const double> theta) const = 0;
  virtual bool in_support(std::span<const double> theta) const = 0;
  virtual void sample(Rng& rng, std::span<double> out) const = 0;
  virtual std::vector<double> marginal_stddev() const = 0;
};

// Independent product of marginals, aligned with the ParameterVector order
// when built by build_prior.
class Prior final : public ParameterPrior {
 public:
  explicit Prior(std::vector<MarginalPrior> marginals);

  int dim() const override { return static_cast<int>(marginals_.size()); }
  double log_density(std::span<const double> theta) const override;
  bool in_support(std::span<const double> theta) const override;
  void sample(Rng& rng, std::span<double> out) const override;
  std::vector<double> marginal_stddev() const override;

  const MarginalPrior& marginal(int i) const { return marginals_.at(i); }
  std::vector<double> marginal_mean() const;

  // n i.i.d. joint draws, row-major n x dim.
  std::vector<std::vector<double>> sample_matrix(int n, Rng& rng) const;

 private:
  std::vector<MarginalPrior> marginals_;
};

// Sources needed to build informative marginals (scenario 2) plus the
// selectable dispersion of the contraceptive-failure prior.
struct ScenarioConfig {
  std::string mu_d_histogram_path;
  std::string delta_r_histogram_path;
  std::string mu_b_histogram_path;
  double kappa_beta_a = 2.0;
  double kappa_beta_b = 8.0;
};

// Scenario 1 and 3 share the weak prior; scenario 2 swaps in informative
// marginals for mu_d, delta_r and mu_b loaded from histogram files.
Prior build_prior(int scenario, const ScenarioConfig& config = {});

// Gamma whose 2.5% / 97.5% quantiles match (q025, q975). The quantile ratio
// is scale-free and strictly decreasing in the shape, so the shape is found
// by monotone bisection and the rate follows.
GammaMarginal fit_gamma_to_quantiles(double q025, double q975);

// Reads a bin_lo,bin_hi,mass CSV into a piecewise-constant marginal.
EmpiricalMarginal load_empirical_marginal(const std::string& path);

// Key-value manifest listing every marginal's family and hyperparameters.
void write_prior_manifest(const Prior& prior, int scenario, const std::string& path);
struct PriorManifest {
  Prior prior;
  int scenario;
};
PriorManifest load_prior_manifest(const std::string& path);

// Central 95% envelope of fecundability over prior draws of (beta1, beta2),
// evaluated at one age. Used to check that the beta priors generously cover
// plausible monthly conception probabilities.
struct FecundabilityEnvelope {
  double q025, q975;
};
FecundabilityEnvelope fecundability_prior_envelope(const Prior& prior,
                                                   double age_years, int n_draws,
                                                   std::uint64_t seed);

}  // namespace cohortsbi
