#include "cohortsbi/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cohortsbi/errors.hpp"

namespace cohortsbi {

namespace {
constexpr double kMonthsPerYear = 12.0;
constexpr double kAgeMin = 10.0;
constexpr double kAgeMax = 50.0;

void require(bool ok, const char* what) {
  if (!ok) throw std::domain_error(std::string("ParameterVector: ") + what);
}
}  // namespace

std::array<double, kNumParams> ParameterVector::to_array() const {
  return {mu_s, sigma_s, delta_r, sigma_r, mu_d, sigma_d,
          mu_b, sigma_b, kappa,   beta1,   beta2};
}

ParameterVector ParameterVector::from_span(std::span<const double> values) {
  if (values.size() != kNumParams)
    throw ContractError("ParameterVector: expected " +
                        std::to_string(kNumParams) + " components, got " +
                        std::to_string(values.size()));
  return ParameterVector{values[0], values[1], values[2], values[3],
                         values[4], values[5], values[6], values[7],
                         values[8], values[9], values[10]};
}

void ParameterVector::validate() const {
  require(mu_s > 0.0, "mu_s must be positive");
  require(sigma_s >= 0.0, "sigma_s must be non-negative");
  require(delta_r >= 0.0, "delta_r must be non-negative");
  require(sigma_r >= 0.0, "sigma_r must be non-negative");
  require(mu_d > 0.0, "mu_d must be positive");
  require(sigma_d > 0.0, "sigma_d must be positive");
  require(mu_b > 0.0, "mu_b must be positive");
  require(sigma_b >= 0.0, "sigma_b must be non-negative");
  // zero is admitted so perfect-contraception cohorts are expressible
  require(kappa >= 0.0 && kappa < 1.0, "kappa must lie in [0,1)");
  require(beta1 >= 0.0, "beta1 must be non-negative");
  require(beta2 >= 0.0, "beta2 must be non-negative");
  for (double v : to_array())
    require(std::isfinite(v), "all components must be finite");
}

LognormalMoments lognormal_params_from_moments(double mean, double sd) {
  if (!(mean > 0.0))
    throw std::domain_error("lognormal_params_from_moments: mean must be positive");
  if (!(sd >= 0.0))
    throw std::domain_error("lognormal_params_from_moments: sd must be non-negative");
  if (sd == 0.0) return {std::log(mean), 0.0};
  const double m2 = mean * mean;
  return {std::log(m2 / std::sqrt(m2 + sd * sd)),
          std::sqrt(std::log1p(sd * sd / m2))};
}

WeibullMoments weibull_params_from_moments(double mean, double sd) {
  if (!(mean > 0.0))
    throw std::domain_error("weibull_params_from_moments: mean must be positive");
  if (!(sd > 0.0))
    throw std::domain_error("weibull_params_from_moments: sd must be positive");
  const double alpha = std::pow(sd / mean, -1.086);
  const double lambda = mean / std::tgamma(1.0 + 1.0 / alpha);
  return {alpha, lambda};
}

double fecundability_raw(double age_years, double beta1, double beta2) {
  if (age_years < kAgeMin || age_years > kAgeMax)
    throw std::domain_error("fecundability: age outside [10, 50]");
  const double xs = (age_years - kAgeMin) / (kAgeMax - kAgeMin);
  const double one = 1.0 - xs;
  return 3.0 * xs * one * (beta1 * one + beta2 * xs);
}

double fecundability(double age_years, double beta1, double beta2) {
  double phi = fecundability_raw(age_years, beta1, beta2);
  if (phi < 0.0) return 0.0;
  if (phi > 1.0) return 1.0;
  return phi;
}

double sample_lognormal_moments(double mean, double sd, Rng& rng) {
  if (sd == 0.0) {
    if (!(mean > 0.0))
      throw std::domain_error("sample_lognormal_moments: mean must be positive");
    return mean;
  }
  LognormalMoments p = lognormal_params_from_moments(mean, sd);
  return std::exp(rng.normal(p.mu_ln, p.sigma_ln));
}

double sample_weibull_moments(double mean, double sd, Rng& rng) {
  if (sd == 0.0) {
    if (!(mean > 0.0))
      throw std::domain_error("sample_weibull_moments: mean must be positive");
    return mean;
  }
  WeibullMoments p = weibull_params_from_moments(mean, sd);
  const double u = rng.uniform();
  return p.lambda * std::pow(-std::log1p(-u), 1.0 / p.alpha);
}

WomanTraits sample_woman(const ParameterVector& theta, Rng& rng) {
  WomanTraits t;
  t.x_i = kMonthsPerYear * sample_lognormal_moments(theta.mu_s, theta.sigma_s, rng);
  t.r_i = kMonthsPerYear *
          sample_lognormal_moments(theta.mu_s + theta.delta_r, theta.sigma_r, rng);
  t.d_i = static_cast<int>(
      std::lround(sample_weibull_moments(theta.mu_d, theta.sigma_d, rng)));
  t.b_i = sample_lognormal_moments(theta.mu_b, theta.sigma_b, rng);
  return t;
}

std::string_view to_string(IntentState state) {
  switch (state) {
    case IntentState::kNonSusceptible: return "non-susceptible";
    case IntentState::kNotYetActive: return "not-yet-active";
    case IntentState::kTrying: return "trying";
    case IntentState::kContracepting: return "contracepting";
  }
  return "unknown";
}

ConceptionDecision conception_probability(const WomanTraits& traits, int parity,
                                          std::optional<int> months_since_last_birth,
                                          int age_months,
                                          const ParameterVector& theta,
                                          bool susceptible) {
  if (parity < 0) throw std::domain_error("conception_probability: negative parity");
  if (!susceptible) return {0.0, IntentState::kNonSusceptible};
  if (static_cast<double>(age_months) < traits.x_i)
    return {0.0, IntentState::kNotYetActive};

  const double phi =
      fecundability(static_cast<double>(age_months) / kMonthsPerYear,
                    theta.beta1, theta.beta2);

  bool spacing_ok = true;
  if (parity > 0) {
    if (!months_since_last_birth)
      throw ContractError(
          "conception_probability: months_since_last_birth required at parity > 0");
    spacing_ok = static_cast<double>(*months_since_last_birth) >= traits.b_i;
  }
  const bool below_desired = parity < traits.d_i;
  if (static_cast<double>(age_months) >= traits.r_i && below_desired && spacing_ok)
    return {phi, IntentState::kTrying};

  const double kappa_eff =
      below_desired ? theta.kappa : theta.kappa * theta.kappa;
  return {kappa_eff * phi, IntentState::kContracepting};
}

}  // namespace cohortsbi
