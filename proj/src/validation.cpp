#include "cohortsbi/validation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cohortsbi/errors.hpp"
#include "cohortsbi/math.hpp"
#include "cohortsbi/parallel.hpp"
#include "cohortsbi/rng.hpp"

namespace cohortsbi {

namespace {
enum : std::uint64_t {
  kTagTruth = 11,
  kTagObserved = 12,
  kTagInfer = 13,
  kTagPpcDraws = 21,
  kTagPpcSim = 22,
};
}  // namespace

std::uint64_t cv_fold_seed(std::uint64_t master_seed, int fold) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(fold));
}

std::vector<double> cv_fold_truth(const ParameterPrior& prior,
                                  std::uint64_t master_seed, int fold) {
  Rng rng(derive_seed(cv_fold_seed(master_seed, fold), kTagTruth));
  std::vector<double> truth(prior.dim());
  prior.sample(rng, truth);
  return truth;
}

CvReport cross_validate(const ParameterPrior& prior, const std::string& scenario_label,
                        int n_folds, std::uint64_t master_seed,
                        const SimulatorFn& simulator, const InferenceFn& infer) {
  if (n_folds < 1) throw ContractError("cross_validate: n_folds must be >= 1");
  CvReport report;
  report.scenario_label = scenario_label;
  report.folds.resize(n_folds);

  for (int fold = 0; fold < n_folds; ++fold) {
    CvFold& f = report.folds[fold];
    f.fold = fold;
    f.seed = cv_fold_seed(master_seed, fold);
    f.truth = cv_fold_truth(prior, master_seed, fold);
    try {
      const std::vector<double> x_o =
          simulator(f.truth, derive_seed(f.seed, kTagObserved));
      f.estimate = infer(x_o, derive_seed(f.seed, kTagInfer));
      if (f.estimate.size() != f.truth.size())
        throw ContractError("inference returned a wrong-sized estimate");
    } catch (const std::exception& e) {
      f.failed = true;
      f.error = e.what();
      f.estimate.clear();
      ++report.n_failed;
    }
  }

  std::vector<std::vector<double>> estimates, truths;
  for (const CvFold& f : report.folds) {
    if (f.failed) continue;
    estimates.push_back(f.estimate);
    truths.push_back(f.truth);
  }
  if (!estimates.empty())
    report.nrmse = normalized_rmse(estimates, truths, prior);
  return report;
}

std::vector<double> normalized_rmse(const std::vector<std::vector<double>>& estimates,
                                    const std::vector<std::vector<double>>& truths,
                                    const ParameterPrior& prior) {
  if (estimates.size() != truths.size() || estimates.empty())
    throw ContractError("normalized_rmse: mismatched or empty fold sets");
  const std::size_t dim = static_cast<std::size_t>(prior.dim());
  for (std::size_t i = 0; i < estimates.size(); ++i)
    if (estimates[i].size() != dim || truths[i].size() != dim)
      throw ContractError("normalized_rmse: wrong parameter dimension");

  const std::vector<double> sd = prior.marginal_stddev();
  std::vector<double> out(dim, 0.0);
  for (std::size_t p = 0; p < dim; ++p) {
    double mse = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      const double e = estimates[i][p] - truths[i][p];
      mse += e * e;
    }
    mse /= static_cast<double>(estimates.size());
    if (!(sd[p] > 0.0))
      throw NumericError("normalized_rmse: zero prior sd for parameter " +
                         std::to_string(p));
    out[p] = std::sqrt(mse) / sd[p];
  }
  return out;
}

PpcReport posterior_predictive_check(const PosteriorArtifact& artifact,
                                     const ParameterPrior& prior,
                                     std::span<const double> observed, int n_draws,
                                     const SimulatorFn& simulator,
                                     std::uint64_t seed) {
  if (n_draws < 1) throw ContractError("posterior_predictive_check: need draws");
  if (observed.size() != artifact.x_o.size())
    throw ContractError(
        "posterior_predictive_check: observed dimension differs from the "
        "artifact layout");

  Rng draw_rng(derive_seed(seed, kTagPpcDraws));
  const PosteriorDraws draws =
      sample_posterior(artifact.net, artifact.theta_std, artifact.x_std,
                       artifact.x_o, n_draws, prior, draw_rng);

  const int dim = static_cast<int>(observed.size());
  RowMatrix sims(n_draws, dim);
  std::vector<std::string> errors(n_draws);
  parallel_for(n_draws, [&](std::size_t j) {
    try {
      const std::vector<double> x =
          simulator(draws.draws.row(static_cast<int>(j)),
                    derive_seed(seed, kTagPpcSim, j));
      if (static_cast<int>(x.size()) != dim)
        throw ContractError("simulator output dimension mismatch");
      std::copy(x.begin(), x.end(), sims.row(static_cast<int>(j)).begin());
    } catch (const std::exception& e) {
      errors[j] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty())
      throw NumericError("posterior_predictive_check: simulation failed: " + e);

  PpcReport report;
  report.n_draws = n_draws;
  report.observed.assign(observed.begin(), observed.end());
  report.mean.resize(dim);
  report.lo95.resize(dim);
  report.hi95.resize(dim);
  int covered = 0;
  for (int d = 0; d < dim; ++d) {
    std::vector<double> column(n_draws);
    double mean = 0.0;
    for (int j = 0; j < n_draws; ++j) {
      column[j] = sims.row(j)[d];
      mean += column[j];
    }
    report.mean[d] = mean / n_draws;
    report.lo95[d] = math::quantile(column, 0.025);
    report.hi95[d] = math::quantile(std::move(column), 0.975);
    if (observed[d] >= report.lo95[d] && observed[d] <= report.hi95[d]) ++covered;
  }
  report.coverage = static_cast<double>(covered) / dim;
  return report;
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty())
    throw ContractError("js_divergence: mismatched or empty mass vectors");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !(q[i] >= 0.0))
      throw ContractError("js_divergence: negative mass");
    sp += p[i];
    sq += q[i];
  }
  if (std::fabs(sp - 1.0) > 1e-9 || std::fabs(sq - 1.0) > 1e-9)
    throw ContractError("js_divergence: inputs must be normalized");

  // 0*log(0) := 0; m > 0 wherever p or q is positive. Each bin's two terms
  // are combined before accumulating so the result is exactly symmetric.
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    const double tp = p[i] > 0.0 ? 0.5 * p[i] * std::log2(p[i] / m) : 0.0;
    const double tq = q[i] > 0.0 ? 0.5 * q[i] * std::log2(q[i] / m) : 0.0;
    js += tp + tq;
  }
  if (js < 0.0) js = 0.0;  // guard tiny negative round-off
  return js;
}

double js_divergence(const Histogram& p, const Histogram& q) {
  if (p.edges != q.edges)
    throw ContractError("js_divergence: histograms must share a bin grid");
  return js_divergence(std::span<const double>(p.masses),
                       std::span<const double>(q.masses));
}

namespace {

// One side without events counts as maximal divergence; both empty as zero.
double js_after_rebin(const Histogram& simulated, const Histogram& observed,
                      Histogram& rebinned_out) {
  rebinned_out = rebin(simulated, observed.edges);
  if (observed.empty() && rebinned_out.empty()) return 0.0;
  if (observed.empty() || rebinned_out.empty()) return 1.0;
  return js_divergence(rebinned_out, observed);
}

}  // namespace

MicroValidationReport validate_micro(const ParameterVector& theta_hat,
                                     const MicroDistributions& observed,
                                     std::uint32_t n_women, std::uint64_t seed) {
  const CohortResult cohort = simulate_cohort(theta_hat, n_women, seed);
  const MicroDistributions sim = extract_micro_distributions(cohort);

  MicroValidationReport report;
  report.observed = observed;
  report.js_age_first_sex = js_after_rebin(sim.age_first_sex, observed.age_first_sex,
                                           report.simulated.age_first_sex);
  report.js_desired_family_size =
      js_after_rebin(sim.desired_family_size, observed.desired_family_size,
                     report.simulated.desired_family_size);
  report.js_birth_intervals =
      js_after_rebin(sim.birth_intervals, observed.birth_intervals,
                     report.simulated.birth_intervals);
  return report;
}

}  // namespace cohortsbi
