#include "cohortsbi/math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "cohortsbi/errors.hpp"

namespace cohortsbi::math {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 1000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x) = 1 - P(a, x), valid for x >= a + 1.
double gamma_q_contfrac(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -kInf;
  double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ContractError("quantile: empty sample");
  if (p < 0.0 || p > 1.0) throw std::domain_error("quantile: p must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double gamma_p(double a, double x) {
  if (a <= 0.0) throw std::domain_error("gamma_p: shape must be positive");
  if (x < 0.0) throw std::domain_error("gamma_p: x must be non-negative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double gamma_quantile(double a, double p) {
  if (a <= 0.0) throw std::domain_error("gamma_quantile: shape must be positive");
  if (p <= 0.0 || p >= 1.0)
    throw std::domain_error("gamma_quantile: p must be in (0, 1)");

  // Bracket the root, then bisect; gamma_p is strictly increasing in x.
  double hi = a > 1.0 ? a : 1.0;
  int guard = 0;
  while (gamma_p(a, hi) < p) {
    hi *= 2.0;
    if (++guard > 400) throw NumericError("gamma_quantile: bracket failed");
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (gamma_p(a, mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

double log_gamma_density(double x, double shape, double rate) {
  if (shape <= 0.0 || rate <= 0.0)
    throw std::domain_error("log_gamma_density: shape and rate must be positive");
  if (x <= 0.0) return -kInf;
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

double log_beta_density(double x, double a, double b) {
  if (a <= 0.0 || b <= 0.0)
    throw std::domain_error("log_beta_density: a and b must be positive");
  if (x <= 0.0 || x >= 1.0) return -kInf;
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
         (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

double log_normal_density(double x, double mean, double sd) {
  if (sd <= 0.0) throw std::domain_error("log_normal_density: sd must be positive");
  double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace cohortsbi::math
