#include "cohortsbi/snpe.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "cohortsbi/errors.hpp"
#include "cohortsbi/math.hpp"
#include "cohortsbi/model.hpp"
#include "cohortsbi/parallel.hpp"

namespace cohortsbi {

namespace {

// Seed-path tags so every random stream in a run is distinct.
enum : std::uint64_t {
  kTagProposal = 1,
  kTagSimulate = 2,
  kTagInit = 3,
  kTagTrain = 4,
  kTagDraws = 5,
};

std::string format_theta(std::span<const double> theta) {
  std::ostringstream ss;
  ss << '[';
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (i) ss << ", ";
    ss << theta[i];
  }
  ss << ']';
  return ss.str();
}

}  // namespace

PosteriorArtifact run_snpe(std::span<const double> x_o, const ParameterPrior& prior,
                           const SnpeConfig& config, const SimulatorFn& simulator) {
  if (config.rounds < 1) throw ContractError("run_snpe: rounds must be >= 1");
  if (config.n_sim < config.training.batch_size)
    throw ContractError("run_snpe: n_sim must be at least the batch size");
  if (x_o.empty()) throw ContractError("run_snpe: empty observed summary");
  for (double v : x_o)
    if (!std::isfinite(v))
      throw ContractError("run_snpe: observed summary must be finite");

  const int dim_theta = prior.dim();
  const int dim_x = static_cast<int>(x_o.size());

  PosteriorArtifact artifact;
  artifact.x_o.assign(x_o.begin(), x_o.end());
  artifact.config = config;

  RowMatrix thetas(0, dim_theta);
  RowMatrix xs(0, dim_x);

  for (int round = 1; round <= config.rounds; ++round) {
    // Propose parameters: prior in round 1, current posterior afterwards.
    RowMatrix proposals(config.n_sim, dim_theta);
    double leakage = 0.0;
    Rng propose_rng(derive_seed(config.seed, kTagProposal, round));
    if (round == 1) {
      for (int j = 0; j < config.n_sim; ++j)
        prior.sample(propose_rng, proposals.row(j));
    } else {
      PosteriorDraws draws =
          sample_posterior(artifact.net, artifact.theta_std, artifact.x_std,
                           artifact.x_o, config.n_sim, prior, propose_rng);
      proposals = std::move(draws.draws);
      leakage = draws.leakage;
    }

    // Simulate in parallel with per-simulation seeds.
    RowMatrix sims(config.n_sim, dim_x);
    std::vector<std::string> errors(config.n_sim);
    parallel_for(config.n_sim, [&](std::size_t j) {
      const std::uint64_t sim_seed = derive_seed(config.seed, kTagSimulate, round, j);
      try {
        const std::vector<double> x = simulator(proposals.row(j), sim_seed);
        if (static_cast<int>(x.size()) != dim_x)
          throw ContractError("simulator output dimension " +
                              std::to_string(x.size()) + " != observed dimension " +
                              std::to_string(dim_x));
        for (double v : x)
          if (!std::isfinite(v)) throw NumericError("non-finite summary value");
        std::copy(x.begin(), x.end(), sims.row(j).begin());
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
    });
    for (int j = 0; j < config.n_sim; ++j) {
      if (!errors[j].empty())
        throw NumericError("run_snpe: simulation failed in round " +
                           std::to_string(round) + " at theta " +
                           format_theta(proposals.row(j)) + ": " + errors[j]);
    }

    for (int j = 0; j < config.n_sim; ++j) {
      thetas.push_row(proposals.row(j));
      xs.push_row(sims.row(j));
    }

    // Re-fit on the cumulative dataset.
    artifact.net = MixtureDensityNetwork(dim_x, dim_theta, config.mdn,
                                         derive_seed(config.seed, kTagInit, round));
    const TrainingHistory history =
        train(artifact.net, artifact.theta_std, artifact.x_std, thetas, xs, prior,
              config.training, derive_seed(config.seed, kTagTrain, round));

    artifact.rounds.push_back({round, thetas.rows, history.best_val_loss,
                               history.epochs_run, leakage});
  }

  if (config.n_stored_draws > 0) {
    Rng draw_rng(derive_seed(config.seed, kTagDraws));
    PosteriorDraws draws =
        sample_posterior(artifact.net, artifact.theta_std, artifact.x_std,
                         artifact.x_o, config.n_stored_draws, prior, draw_rng);
    artifact.stored_draws = std::move(draws.draws);
    artifact.stored_draw_leakage = draws.leakage;
  } else {
    artifact.stored_draws = RowMatrix(0, dim_theta);
  }
  return artifact;
}

std::vector<ParamSummary> summarize_draws(const RowMatrix& draws) {
  if (draws.rows == 0) throw ContractError("summarize_draws: no draws");
  std::vector<ParamSummary> out(draws.cols);
  for (int p = 0; p < draws.cols; ++p) {
    std::vector<double> column(draws.rows);
    double mean = 0.0;
    for (int i = 0; i < draws.rows; ++i) {
      column[i] = draws.row(i)[p];
      mean += column[i];
    }
    mean /= draws.rows;
    double var = 0.0;
    for (double v : column) var += (v - mean) * (v - mean);
    var /= draws.rows;
    out[p].mean = mean;
    out[p].sd = std::sqrt(var);
    out[p].lo95 = math::quantile(column, 0.025);
    out[p].hi95 = math::quantile(column, 0.975);
  }
  return out;
}

std::vector<ParamSummary> posterior_summaries(const PosteriorArtifact& artifact,
                                              const ParameterPrior& prior,
                                              int n_draws, std::uint64_t seed) {
  if (n_draws < 1) throw ContractError("posterior_summaries: need draws");
  Rng rng(seed);
  const PosteriorDraws draws =
      sample_posterior(artifact.net, artifact.theta_std, artifact.x_std,
                       artifact.x_o, n_draws, prior, rng);
  return summarize_draws(draws.draws);
}

SimulatorFn make_cohort_simulator(std::uint32_t n_women, SummaryLayout layout) {
  if (n_women == 0) throw ContractError("make_cohort_simulator: n_women must be >= 1");
  return [n_women, layout](std::span<const double> theta,
                           std::uint64_t seed) -> std::vector<double> {
    const ParameterVector pv = ParameterVector::from_span(theta);
    const CohortResult cohort = simulate_cohort(pv, n_women, seed);
    return summarize(cohort, layout).values;
  };
}

}  // namespace cohortsbi
