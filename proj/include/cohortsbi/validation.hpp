#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cohortsbi/histogram.hpp"
#include "cohortsbi/prior.hpp"
#include "cohortsbi/simulator.hpp"
#include "cohortsbi/snpe.hpp"

namespace cohortsbi {

struct CvFold {
  int fold = 0;
  std::uint64_t seed = 0;
  std::vector<double> truth;
  std::vector<double> estimate;  // empty when failed
  bool failed = false;
  std::string error;
};

struct CvReport {
  std::string scenario_label;
  std::vector<CvFold> folds;
  std::vector<double> nrmse;  // per parameter, over successful folds
  int n_failed = 0;
};

// Posterior point estimate for a pseudo-observed summary; fold_seed is the
// root for all randomness the implementation needs.
using InferenceFn = std::function<std::vector<double>(
    const std::vector<double>& x_o, std::uint64_t fold_seed)>;

// Ground-truth parameter draw used for fold `fold`; exposed so inference
// stubs in tests can reproduce it.
std::vector<double> cv_fold_truth(const ParameterPrior& prior,
                                  std::uint64_t master_seed, int fold);
std::uint64_t cv_fold_seed(std::uint64_t master_seed, int fold);

// Draw truth from the prior, simulate a pseudo-observation, run the full
// inference independently per fold, and aggregate per-parameter errors.
// Failed folds are recorded and excluded from the error aggregation.
CvReport cross_validate(const ParameterPrior& prior, const std::string& scenario_label,
                        int n_folds, std::uint64_t master_seed,
                        const SimulatorFn& simulator, const InferenceFn& infer);

// Root-mean-squared error per parameter divided by the prior standard
// deviation of that parameter.
std::vector<double> normalized_rmse(const std::vector<std::vector<double>>& estimates,
                                    const std::vector<std::vector<double>>& truths,
                                    const ParameterPrior& prior);

struct PpcReport {
  std::vector<double> observed;
  std::vector<double> mean;
  std::vector<double> lo95;
  std::vector<double> hi95;
  double coverage = 0.0;  // share of dimensions with observed inside the band
  int n_draws = 0;
};

// For each posterior draw simulate a dataset and compare the per-dimension
// predictive band against the observed summary.
PpcReport posterior_predictive_check(const PosteriorArtifact& artifact,
                                     const ParameterPrior& prior,
                                     std::span<const double> observed, int n_draws,
                                     const SimulatorFn& simulator,
                                     std::uint64_t seed);

// Jensen-Shannon divergence in bits between two normalized mass vectors on a
// common grid; in [0, 1].
double js_divergence(std::span<const double> p, std::span<const double> q);
double js_divergence(const Histogram& p, const Histogram& q);

struct MicroValidationReport {
  double js_age_first_sex = 0.0;
  double js_desired_family_size = 0.0;
  double js_birth_intervals = 0.0;
  MicroDistributions simulated;  // rebinned to the observed grids
  MicroDistributions observed;
};

// Simulates one cohort at theta_hat, rebins its micro distributions onto
// the observed grids and reports the JS divergences.
MicroValidationReport validate_micro(const ParameterVector& theta_hat,
                                     const MicroDistributions& observed,
                                     std::uint32_t n_women, std::uint64_t seed);

}  // namespace cohortsbi
