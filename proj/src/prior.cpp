#include "cohortsbi/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cohortsbi/csv.hpp"
#include "cohortsbi/errors.hpp"
#include "cohortsbi/math.hpp"
#include "cohortsbi/model.hpp"

namespace cohortsbi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_family(const GammaMarginal& g) {
  if (!(g.shape > 0.0) || !(g.rate > 0.0))
    throw std::domain_error("gamma marginal: shape and rate must be positive");
}
void validate_family(const UniformMarginal& u) {
  if (!(u.lo < u.hi)) throw std::domain_error("uniform marginal: requires lo < hi");
  if (!std::isfinite(u.lo) || !std::isfinite(u.hi))
    throw std::domain_error("uniform marginal: bounds must be finite");
}
void validate_family(const BetaMarginal& b) {
  if (!(b.a > 0.0) || !(b.b > 0.0))
    throw std::domain_error("beta marginal: a and b must be positive");
}
void validate_family(EmpiricalMarginal& e) {
  if (e.masses.empty() || e.edges.size() != e.masses.size() + 1)
    throw FormatError("empirical marginal: need n+1 edges for n bins");
  for (std::size_t i = 0; i + 1 < e.edges.size(); ++i)
    if (!(e.edges[i] < e.edges[i + 1]))
      throw FormatError("empirical marginal: edges must be strictly increasing");
  for (double edge : e.edges)
    if (!std::isfinite(edge))
      throw FormatError("empirical marginal: edges must be finite");
  double total = 0.0;
  for (double m : e.masses) {
    if (!(m >= 0.0)) throw FormatError("empirical marginal: negative mass");
    total += m;
  }
  if (!(total > 0.0)) throw FormatError("empirical marginal: zero total mass");
  for (double& m : e.masses) m /= total;
}

}  // namespace

MarginalPrior::MarginalPrior(Family family) : family_(std::move(family)) {
  std::visit([](auto& f) { validate_family(f); }, family_);
}

double MarginalPrior::sample(Rng& rng) const {
  return std::visit(
      [&rng](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GammaMarginal>) {
          return rng.gamma(f.shape, f.rate);
        } else if constexpr (std::is_same_v<T, UniformMarginal>) {
          return rng.uniform(f.lo, f.hi);
        } else if constexpr (std::is_same_v<T, BetaMarginal>) {
          return rng.beta(f.a, f.b);
        } else {
          // bin by cumulative mass, then uniform within the bin
          double u = rng.uniform();
          double acc = 0.0;
          std::size_t k = f.masses.size() - 1;
          for (std::size_t i = 0; i < f.masses.size(); ++i) {
            acc += f.masses[i];
            if (u < acc) {
              k = i;
              break;
            }
          }
          return rng.uniform(f.edges[k], f.edges[k + 1]);
        }
      },
      family_);
}

double MarginalPrior::log_density(double x) const {
  return std::visit(
      [x](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GammaMarginal>) {
          return math::log_gamma_density(x, f.shape, f.rate);
        } else if constexpr (std::is_same_v<T, UniformMarginal>) {
          if (x < f.lo || x > f.hi) return -kInf;
          return -std::log(f.hi - f.lo);
        } else if constexpr (std::is_same_v<T, BetaMarginal>) {
          return math::log_beta_density(x, f.a, f.b);
        } else {
          if (x < f.edges.front() || x > f.edges.back()) return -kInf;
          auto it = std::upper_bound(f.edges.begin(), f.edges.end(), x);
          std::size_t k = it == f.edges.end()
                              ? f.masses.size() - 1
                              : static_cast<std::size_t>(it - f.edges.begin()) - 1;
          if (k >= f.masses.size()) k = f.masses.size() - 1;
          double density = f.masses[k] / (f.edges[k + 1] - f.edges[k]);
          return density > 0.0 ? std::log(density) : -kInf;
        }
      },
      family_);
}

bool MarginalPrior::in_support(double x) const {
  return std::isfinite(log_density(x));
}

double MarginalPrior::mean() const {
  return std::visit(
      [](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GammaMarginal>) {
          return f.shape / f.rate;
        } else if constexpr (std::is_same_v<T, UniformMarginal>) {
          return 0.5 * (f.lo + f.hi);
        } else if constexpr (std::is_same_v<T, BetaMarginal>) {
          return f.a / (f.a + f.b);
        } else {
          double m = 0.0;
          for (std::size_t i = 0; i < f.masses.size(); ++i)
            m += f.masses[i] * 0.5 * (f.edges[i] + f.edges[i + 1]);
          return m;
        }
      },
      family_);
}

double MarginalPrior::stddev() const {
  return std::visit(
      [this](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GammaMarginal>) {
          return std::sqrt(f.shape) / f.rate;
        } else if constexpr (std::is_same_v<T, UniformMarginal>) {
          return (f.hi - f.lo) / std::sqrt(12.0);
        } else if constexpr (std::is_same_v<T, BetaMarginal>) {
          double s = f.a + f.b;
          return std::sqrt(f.a * f.b / (s * s * (s + 1.0)));
        } else {
          // piecewise-uniform: each bin adds its own width^2/12
          double mean = this->mean();
          double ex2 = 0.0;
          for (std::size_t i = 0; i < f.masses.size(); ++i) {
            double c = 0.5 * (f.edges[i] + f.edges[i + 1]);
            double w = f.edges[i + 1] - f.edges[i];
            ex2 += f.masses[i] * (c * c + w * w / 12.0);
          }
          return std::sqrt(std::max(0.0, ex2 - mean * mean));
        }
      },
      family_);
}

std::pair<double, double> MarginalPrior::support() const {
  return std::visit(
      [](const auto& f) -> std::pair<double, double> {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GammaMarginal>) {
          return {0.0, kInf};
        } else if constexpr (std::is_same_v<T, UniformMarginal>) {
          return {f.lo, f.hi};
        } else if constexpr (std::is_same_v<T, BetaMarginal>) {
          return {0.0, 1.0};
        } else {
          return {f.edges.front(), f.edges.back()};
        }
      },
      family_);
}

std::string MarginalPrior::family_name() const {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, GammaMarginal>)
          return "gamma";
        else if constexpr (std::is_same_v<T, UniformMarginal>)
          return "uniform";
        else if constexpr (std::is_same_v<T, BetaMarginal>)
          return "beta";
        else
          return "empirical";
      },
      family_);
}

Prior::Prior(std::vector<MarginalPrior> marginals) : marginals_(std::move(marginals)) {
  if (marginals_.empty()) throw ContractError("Prior: needs at least one marginal");
}

double Prior::log_density(std::span<const double> theta) const {
  if (theta.size() != marginals_.size())
    throw ContractError("Prior::log_density: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < marginals_.size(); ++i) {
    double ld = marginals_[i].log_density(theta[i]);
    if (!std::isfinite(ld)) return -kInf;
    sum += ld;
  }
  return sum;
}

bool Prior::in_support(std::span<const double> theta) const {
  if (theta.size() != marginals_.size())
    throw ContractError("Prior::in_support: dimension mismatch");
  for (std::size_t i = 0; i < marginals_.size(); ++i)
    if (!marginals_[i].in_support(theta[i])) return false;
  return true;
}

void Prior::sample(Rng& rng, std::span<double> out) const {
  if (out.size() != marginals_.size())
    throw ContractError("Prior::sample: dimension mismatch");
  for (std::size_t i = 0; i < marginals_.size(); ++i)
    out[i] = marginals_[i].sample(rng);
}

std::vector<double> Prior::marginal_stddev() const {
  std::vector<double> out;
  out.reserve(marginals_.size());
  for (const auto& m : marginals_) out.push_back(m.stddev());
  return out;
}

std::vector<double> Prior::marginal_mean() const {
  std::vector<double> out;
  out.reserve(marginals_.size());
  for (const auto& m : marginals_) out.push_back(m.mean());
  return out;
}

std::vector<std::vector<double>> Prior::sample_matrix(int n, Rng& rng) const {
  if (n < 0) throw ContractError("Prior::sample_matrix: negative n");
  std::vector<std::vector<double>> rows(n, std::vector<double>(marginals_.size()));
  for (auto& row : rows) sample(rng, row);
  return rows;
}

GammaMarginal fit_gamma_to_quantiles(double q025, double q975) {
  if (!(q025 > 0.0) || !(q975 > q025))
    throw std::domain_error("fit_gamma_to_quantiles: requires 0 < q025 < q975");
  const double target_ratio = q975 / q025;

  auto ratio = [](double shape) {
    return math::gamma_quantile(shape, 0.975) / math::gamma_quantile(shape, 0.025);
  };

  // ratio(shape) decreases from huge values toward 1 as shape grows
  double lo = 1e-3, hi = 1e6;
  if (ratio(lo) < target_ratio || ratio(hi) > target_ratio)
    throw NumericError("fit_gamma_to_quantiles: quantile ratio out of range");
  for (int it = 0; it < 200; ++it) {
    double mid = std::sqrt(lo * hi);  // bisect in log space
    if (ratio(mid) > target_ratio)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-13 * hi) break;
  }
  const double shape = std::sqrt(lo * hi);
  const double rate = math::gamma_quantile(shape, 0.025) / q025;
  return {shape, rate};
}

EmpiricalMarginal load_empirical_marginal(const std::string& path) {
  const auto rows = read_numeric_csv(path, "bin_lo,bin_hi,mass");
  if (rows.empty()) throw FormatError(path + ": no histogram rows");
  EmpiricalMarginal e;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double lo = rows[i][0], hi = rows[i][1], mass = rows[i][2];
    if (!(hi > lo)) throw FormatError(path + ": bin_hi must exceed bin_lo");
    if (!e.edges.empty() && lo != e.edges.back())
      throw FormatError(path + ": bins must be contiguous");
    if (e.edges.empty()) e.edges.push_back(lo);
    e.edges.push_back(hi);
    e.masses.push_back(mass);
  }
  validate_family(e);
  return e;
}

namespace {

// Broad gamma with the given mean and coefficient of variation 0.5.
GammaMarginal dispersion_gamma(double mean) {
  const double shape = 4.0;  // cv = 1/sqrt(shape)
  return {shape, shape / mean};
}

MarginalPrior empirical_from_file(const std::string& path, const char* param) {
  if (path.empty())
    throw ConfigError(std::string("scenario 2 requires an informative histogram for ") +
                      param);
  return MarginalPrior(load_empirical_marginal(path));
}

}  // namespace

Prior build_prior(int scenario, const ScenarioConfig& config) {
  if (scenario < 1 || scenario > 3)
    throw ConfigError("scenario must be 1, 2 or 3");

  std::vector<MarginalPrior> m;
  m.reserve(kNumParams);
  m.emplace_back(fit_gamma_to_quantiles(14.4, 28.9));            // mu_s
  m.emplace_back(dispersion_gamma(3.0));                         // sigma_s
  m.emplace_back(UniformMarginal{0.0, 8.0});                     // delta_r
  m.emplace_back(dispersion_gamma(3.0));                         // sigma_r
  m.emplace_back(fit_gamma_to_quantiles(1.9, 8.1));              // mu_d
  m.emplace_back(dispersion_gamma(1.5));                         // sigma_d
  m.emplace_back(UniformMarginal{10.0, 100.0});                  // mu_b
  m.emplace_back(dispersion_gamma(12.0));                        // sigma_b
  m.emplace_back(BetaMarginal{config.kappa_beta_a, config.kappa_beta_b});  // kappa
  m.emplace_back(UniformMarginal{0.0, 0.9});                     // beta1
  m.emplace_back(UniformMarginal{0.0, 0.9});                     // beta2

  if (scenario == 2) {
    m[4] = empirical_from_file(config.mu_d_histogram_path, "mu_d");
    m[2] = empirical_from_file(config.delta_r_histogram_path, "delta_r");
    m[6] = empirical_from_file(config.mu_b_histogram_path, "mu_b");
  }
  return Prior(std::move(m));
}

void write_prior_manifest(const Prior& prior, int scenario, const std::string& path) {
  if (prior.dim() != kNumParams)
    throw ContractError("write_prior_manifest: expected an 11-dim prior");
  Manifest entries;
  entries.emplace_back("version", "1");
  entries.emplace_back("scenario", std::to_string(scenario));
  for (int i = 0; i < kNumParams; ++i) {
    const std::string name(kParamNames[i]);
    const MarginalPrior& marg = prior.marginal(i);
    entries.emplace_back(name + ".family", marg.family_name());
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, GammaMarginal>) {
            entries.emplace_back(name + ".shape", format_double(f.shape));
            entries.emplace_back(name + ".rate", format_double(f.rate));
          } else if constexpr (std::is_same_v<T, UniformMarginal>) {
            entries.emplace_back(name + ".lo", format_double(f.lo));
            entries.emplace_back(name + ".hi", format_double(f.hi));
          } else if constexpr (std::is_same_v<T, BetaMarginal>) {
            entries.emplace_back(name + ".a", format_double(f.a));
            entries.emplace_back(name + ".b", format_double(f.b));
          } else {
            std::ostringstream edges, masses;
            for (std::size_t k = 0; k < f.edges.size(); ++k) {
              if (k) edges << ',';
              edges << format_double(f.edges[k]);
            }
            for (std::size_t k = 0; k < f.masses.size(); ++k) {
              if (k) masses << ',';
              masses << format_double(f.masses[k]);
            }
            entries.emplace_back(name + ".edges", edges.str());
            entries.emplace_back(name + ".masses", masses.str());
          }
        },
        marg.family());
  }
  write_manifest(path, entries);
}

namespace {
std::vector<double> parse_double_list(const std::string& s, const std::string& ctx) {
  std::vector<double> out;
  std::istringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_double(cell, ctx));
  return out;
}
}  // namespace

PriorManifest load_prior_manifest(const std::string& path) {
  const Manifest m = read_manifest(path);
  const int scenario = static_cast<int>(parse_double(manifest_get(m, "scenario"), path));
  std::vector<MarginalPrior> marginals;
  marginals.reserve(kNumParams);
  for (int i = 0; i < kNumParams; ++i) {
    const std::string name(kParamNames[i]);
    const std::string family = manifest_get(m, name + ".family");
    if (family == "gamma") {
      marginals.emplace_back(
          GammaMarginal{parse_double(manifest_get(m, name + ".shape"), path),
                        parse_double(manifest_get(m, name + ".rate"), path)});
    } else if (family == "uniform") {
      marginals.emplace_back(
          UniformMarginal{parse_double(manifest_get(m, name + ".lo"), path),
                          parse_double(manifest_get(m, name + ".hi"), path)});
    } else if (family == "beta") {
      marginals.emplace_back(
          BetaMarginal{parse_double(manifest_get(m, name + ".a"), path),
                       parse_double(manifest_get(m, name + ".b"), path)});
    } else if (family == "empirical") {
      EmpiricalMarginal e;
      e.edges = parse_double_list(manifest_get(m, name + ".edges"), path);
      e.masses = parse_double_list(manifest_get(m, name + ".masses"), path);
      marginals.emplace_back(std::move(e));
    } else {
      throw FormatError(path + ": unknown family '" + family + "' for " + name);
    }
  }
  return {Prior(std::move(marginals)), scenario};
}

FecundabilityEnvelope fecundability_prior_envelope(const Prior& prior,
                                                   double age_years, int n_draws,
                                                   std::uint64_t seed) {
  if (prior.dim() != kNumParams)
    throw ContractError("fecundability_prior_envelope: expected an 11-dim prior");
  Rng rng(seed);
  std::vector<double> phis;
  phis.reserve(n_draws);
  std::vector<double> draw(kNumParams);
  for (int i = 0; i < n_draws; ++i) {
    prior.sample(rng, draw);
    phis.push_back(fecundability(age_years, draw[9], draw[10]));
  }
  return {math::quantile(phis, 0.025), math::quantile(phis, 0.975)};
}

}  // namespace cohortsbi
