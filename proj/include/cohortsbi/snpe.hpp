#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cohortsbi/estimator.hpp"
#include "cohortsbi/prior.hpp"
#include "cohortsbi/row_matrix.hpp"
#include "cohortsbi/simulator.hpp"

namespace cohortsbi {

// Maps a parameter vector and a seed to a summary vector. Implementations
// must be pure: the same (theta, seed) always yields the same output.
using SimulatorFn =
    std::function<std::vector<double>(std::span<const double> theta, std::uint64_t seed)>;

struct SnpeConfig {
  int rounds = 5;
  int n_sim = 2000;            // simulations per round
  std::uint32_t n_women = 2000;  // cohort size per simulation (production runs)
  int scenario = 1;
  std::uint64_t seed = 0;
  TrainingOptions training;
  MdnConfig mdn;
  int n_stored_draws = 2000;
};

struct RoundLog {
  int round = 0;
  int n_cumulative = 0;       // dataset rows after this round
  double best_val_loss = 0.0;
  int epochs = 0;
  double leakage = 0.0;  // when proposing this round's parameters
};

struct PosteriorArtifact {
  MixtureDensityNetwork net;
  Standardizer theta_std, x_std;
  std::vector<double> x_o;
  SnpeConfig config;
  std::vector<RoundLog> rounds;
  RowMatrix stored_draws;
  double stored_draw_leakage = 0.0;
};

// Multi-round sequential estimation: round 1 proposes from the prior, each
// later round proposes from the current posterior estimate at x_o; the
// estimator is re-fit on all rounds' simulations after every round.
PosteriorArtifact run_snpe(std::span<const double> x_o, const ParameterPrior& prior,
                           const SnpeConfig& config, const SimulatorFn& simulator);

struct ParamSummary {
  double mean = 0.0, sd = 0.0, lo95 = 0.0, hi95 = 0.0;
};

// Monte-Carlo summaries over fresh rejection-filtered posterior draws.
std::vector<ParamSummary> posterior_summaries(const PosteriorArtifact& artifact,
                                              const ParameterPrior& prior,
                                              int n_draws, std::uint64_t seed);

std::vector<ParamSummary> summarize_draws(const RowMatrix& draws);

// Adapter running the cohort simulator and reducing to the given layout.
SimulatorFn make_cohort_simulator(std::uint32_t n_women, SummaryLayout layout);

}  // namespace cohortsbi
