#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cohortsbi/csv.hpp"
#include "cohortsbi/histogram.hpp"
#include "cohortsbi/prior.hpp"
#include "cohortsbi/simulator.hpp"
#include "cohortsbi/snpe.hpp"
#include "cohortsbi/validation.hpp"

namespace cohortsbi {

// Observed input data: rates over the contiguous age grid 10..49 plus
// optional micro-level histograms.
struct ObservedData {
  std::vector<double> asfr;                  // 40 entries, ages 10..49
  std::optional<std::vector<double>> asufr;  // same grid
  std::optional<Histogram> micro_age_first_sex;
  std::optional<Histogram> micro_desired_family_size;
  std::optional<Histogram> micro_birth_intervals;
  std::string label;

  double tfr() const;  // sum of asfr
  SummaryVector summary(SummaryLayout layout) const;  // throws if asufr missing
};

struct ObservedPaths {
  std::string asfr;
  std::string asufr;
  std::string micro_age_first_sex;
  std::string micro_desired_family_size;
  std::string micro_birth_intervals;
  std::string label;
};

// Loads and validates: contiguous ages, non-negative finite rates,
// asufr <= asfr wherever both are present. Errors name the offending age or
// line.
ObservedData load_observed(const ObservedPaths& paths);

// age,rate files
std::vector<double> load_rate_csv(const std::string& path);
void write_rate_csv(const std::string& path, std::span<const double> rates);

// bin_lo,bin_hi,mass files; +inf allowed as the last bin_hi
Histogram load_histogram_csv(const std::string& path);
void write_histogram_csv(const std::string& path, const Histogram& hist);

// births.csv / traits.csv under `dir`
void write_cohort_csvs(const std::string& dir, const CohortResult& result);
// age,asfr[,asufr]
void write_summary_csv(const std::string& path, const SummaryVector& summary);
// age,observed,mean,lo95,hi95 (age cycles over 10..49 per summary block)
void write_ppc_csv(const std::string& path, const PpcReport& report);

// Posterior artifact directory: estimator.txt, priors.manifest,
// config.manifest, rounds.csv, draws.csv.
void save_artifact(const std::string& dir, const PosteriorArtifact& artifact,
                   const Prior& prior, int scenario);

struct LoadedArtifact {
  PosteriorArtifact artifact;
  Prior prior;
  int scenario = 1;
};
LoadedArtifact load_artifact(const std::string& dir);

}  // namespace cohortsbi
