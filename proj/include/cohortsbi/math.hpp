#pragma once

#include <span>
#include <vector>

namespace cohortsbi::math {

double log_sum_exp(std::span<const double> v);

// p-quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double p);

// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
double gamma_p(double a, double x);

// Inverse of gamma_p in x for fixed shape a, i.e. the p-quantile of a
// Gamma(a, rate = 1) variate.
double gamma_quantile(double a, double p);

// Log densities; -inf outside the support.
double log_gamma_density(double x, double shape, double rate);
double log_beta_density(double x, double a, double b);
double log_normal_density(double x, double mean, double sd);

}  // namespace cohortsbi::math
