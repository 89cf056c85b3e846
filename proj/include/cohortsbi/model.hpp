#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

#include "cohortsbi/rng.hpp"

namespace cohortsbi {

inline constexpr int kNumParams = 11;

// Canonical component order; part of the public contract (CSV columns,
// estimator input layout, manifest keys).
inline constexpr std::array<std::string_view, kNumParams> kParamNames = {
    "mu_s", "sigma_s", "delta_r", "sigma_r", "mu_d", "sigma_d",
    "mu_b", "sigma_b", "kappa",   "beta1",   "beta2"};

// The eleven behavioral parameters of the life-course model.
struct ParameterVector {
  double mu_s;     // mean age at sexual initiation, years
  double sigma_s;  // sd of age at sexual initiation, years
  double delta_r;  // mean gap from initiation to intentional reproduction, years
  double sigma_r;  // sd of age at intentional reproduction, years
  double mu_d;     // mean desired family size, children
  double sigma_d;  // sd of desired family size, children
  double mu_b;     // mean desired birth spacing, months
  double sigma_b;  // sd of desired birth spacing, months
  double kappa;    // monthly contraceptive failure probability, in (0,1)
  double beta1;    // fecundability curve: peak coefficient, >= 0
  double beta2;    // fecundability curve: decline coefficient, >= 0

  std::array<double, kNumParams> to_array() const;
  static ParameterVector from_span(std::span<const double> values);

  // Throws std::domain_error naming the offending component.
  void validate() const;
};

// Underlying parameters of a lognormal with given mean/sd.
struct LognormalMoments {
  double mu_ln;     // mean of logs
  double sigma_ln;  // sd of logs
};

// Weibull shape/scale approximated from mean/sd.
struct WeibullMoments {
  double alpha;   // shape
  double lambda;  // scale
};

LognormalMoments lognormal_params_from_moments(double mean, double sd);
WeibullMoments weibull_params_from_moments(double mean, double sd);

// Monthly conception probability for a sexually active woman not using
// contraception, at age in years within [10, 50]. Two interior Bernstein
// basis polynomials of degree 3 on the rescaled age; zero at both window
// endpoints by construction. Clamped to [0, 1].
double fecundability(double age_years, double beta1, double beta2);

// Unclamped value, used to audit how often the clamp binds.
double fecundability_raw(double age_years, double beta1, double beta2);

// Per-woman latent traits. Ages and spacing are in months; d_i is the
// desired number of children.
struct WomanTraits {
  double x_i;  // age at sexual initiation
  double r_i;  // age at intentional reproduction
  int d_i;     // desired family size
  double b_i;  // desired birth spacing
};

// Draws x (lognormal, years -> months), r (lognormal, years -> months),
// d (Weibull rounded to nearest integer), b (lognormal, months), in that
// fixed order from `rng`.
WomanTraits sample_woman(const ParameterVector& theta, Rng& rng);

// Moment-parameterized samplers with a point-mass branch at sd = 0.
double sample_lognormal_moments(double mean, double sd, Rng& rng);
double sample_weibull_moments(double mean, double sd, Rng& rng);

enum class IntentState {
  kNonSusceptible,  // pregnant or in postpartum amenorrhea
  kNotYetActive,    // before sexual initiation
  kTrying,          // actively trying to conceive, no contraception
  kContracepting,   // sexually active, avoiding conception
};

std::string_view to_string(IntentState state);

struct ConceptionDecision {
  double probability;
  IntentState state;
};

// Monthly conception probability and the intent it derives from.
// Trying requires: past the age at intentional reproduction, below desired
// parity, and (beyond parity zero) the desired spacing elapsed since the
// last birth. Otherwise contraception scales fecundability by kappa, or by
// kappa^2 once desired parity is reached.
ConceptionDecision conception_probability(const WomanTraits& traits, int parity,
                                          std::optional<int> months_since_last_birth,
                                          int age_months,
                                          const ParameterVector& theta,
                                          bool susceptible);

}  // namespace cohortsbi
