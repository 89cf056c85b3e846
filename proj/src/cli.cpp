#include "cohortsbi/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cohortsbi/errors.hpp"
#include "cohortsbi/io.hpp"
#include "cohortsbi/model.hpp"
#include "cohortsbi/parallel.hpp"
#include "cohortsbi/prior.hpp"
#include "cohortsbi/simulator.hpp"
#include "cohortsbi/snpe.hpp"
#include "cohortsbi/validation.hpp"
#include "cohortsbi/version.hpp"

namespace cohortsbi {

namespace {

namespace fs = std::filesystem;

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ';');
  return s;
}

std::uint64_t resolve_seed(std::uint64_t flag_seed) {
  if (const char* env = std::getenv("COHORT_SBI_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("COHORT_SBI_SEED must be an unsigned 64-bit integer");
    }
  }
  return flag_seed;
}

std::vector<double> parse_theta_values(const std::string& csv) {
  std::vector<double> values;
  std::istringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ','))
    values.push_back(parse_double(cell, "--theta"));
  if (values.size() != kNumParams)
    throw ConfigError("--theta needs " + std::to_string(kNumParams) +
                      " comma-separated values (" +
                      std::to_string(values.size()) + " given)");
  return values;
}

std::string path_in(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

void write_run_manifest(const std::string& dir, const std::string& command,
                        Manifest extra) {
  Manifest m;
  m.emplace_back("version", kVersion);
  m.emplace_back("command", command);
  m.insert(m.end(), extra.begin(), extra.end());
  fs::create_directories(dir);
  write_manifest(path_in(dir, "run.manifest"), m);
}

void write_param_summaries(const std::string& path,
                           const std::vector<ParamSummary>& summaries) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "param,mean,sd,lo95,hi95\n";
  for (std::size_t p = 0; p < summaries.size(); ++p) {
    const std::string name = summaries.size() == kNumParams
                                 ? std::string(kParamNames[p])
                                 : "p" + std::to_string(p);
    out << name << ',' << format_double(summaries[p].mean) << ','
        << format_double(summaries[p].sd) << ','
        << format_double(summaries[p].lo95) << ','
        << format_double(summaries[p].hi95) << '\n';
  }
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  std::string theta_csv;
  std::uint32_t n_women = 2000;
  std::uint64_t seed = 1;
  std::string layout = "asfr+asufr";
  std::string out_dir;
};

void run_simulate(const SimulateOpts& opt, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(opt.seed);
  const ParameterVector theta =
      ParameterVector::from_span(parse_theta_values(opt.theta_csv));
  theta.validate();
  const SummaryLayout layout = summary_layout_from_string(opt.layout);

  const CohortResult cohort = simulate_cohort(theta, opt.n_women, seed);
  fs::create_directories(opt.out_dir);
  write_cohort_csvs(opt.out_dir, cohort);
  const SummaryVector summary = summarize(cohort, layout);
  write_summary_csv(path_in(opt.out_dir, "rates.csv"), summary);
  const MicroDistributions micro = extract_micro_distributions(cohort);
  write_histogram_csv(path_in(opt.out_dir, "micro_age_first_sex.csv"),
                      micro.age_first_sex);
  write_histogram_csv(path_in(opt.out_dir, "micro_desired_family_size.csv"),
                      micro.desired_family_size);
  write_histogram_csv(path_in(opt.out_dir, "micro_birth_intervals.csv"),
                      micro.birth_intervals);

  Manifest extra;
  extra.emplace_back("theta", opt.theta_csv);
  extra.emplace_back("n_women", std::to_string(opt.n_women));
  extra.emplace_back("seed", std::to_string(seed));
  extra.emplace_back("layout", opt.layout);
  write_run_manifest(opt.out_dir, "simulate", std::move(extra));

  double tfr = 0.0;
  for (double r : compute_asfr(cohort)) tfr += r;
  out << "simulated " << opt.n_women << " women, " << cohort.births.size()
      << " births, cohort TFR " << tfr << '\n';
  out << "outputs in " << opt.out_dir << '\n';
}

// ---------------------------------------------------------------------------
// shared inference options

struct PriorOpts {
  int scenario = 1;
  std::string mu_d_hist, delta_r_hist, mu_b_hist;
  double kappa_a = 2.0, kappa_b = 8.0;
};

void add_prior_options(CLI::App* cmd, PriorOpts& opt) {
  cmd->add_option("--scenario", opt.scenario, "inference scenario (1, 2 or 3)")
      ->check(CLI::Range(1, 3));
  cmd->add_option("--mu-d-hist", opt.mu_d_hist,
                  "scenario 2: empirical mu_d histogram CSV");
  cmd->add_option("--delta-r-hist", opt.delta_r_hist,
                  "scenario 2: informative delta_r histogram CSV");
  cmd->add_option("--mu-b-hist", opt.mu_b_hist,
                  "scenario 2: informative mu_b histogram CSV");
  cmd->add_option("--kappa-a", opt.kappa_a, "beta prior a for kappa");
  cmd->add_option("--kappa-b", opt.kappa_b, "beta prior b for kappa");
}

Prior build_prior_from_opts(const PriorOpts& opt) {
  ScenarioConfig sc;
  sc.mu_d_histogram_path = opt.mu_d_hist;
  sc.delta_r_histogram_path = opt.delta_r_hist;
  sc.mu_b_histogram_path = opt.mu_b_hist;
  sc.kappa_beta_a = opt.kappa_a;
  sc.kappa_beta_b = opt.kappa_b;
  return build_prior(opt.scenario, sc);
}

struct SnpeOpts {
  int rounds = 5;
  int sims = 2000;
  std::uint32_t n_women = 2000;
  int stored_draws = 2000;
  std::uint64_t seed = 1;
};

void add_snpe_options(CLI::App* cmd, SnpeOpts& opt) {
  cmd->add_option("--rounds", opt.rounds, "estimation rounds");
  cmd->add_option("--sims", opt.sims, "simulations per round");
  cmd->add_option("--n-women", opt.n_women, "cohort size per simulation");
  cmd->add_option("--stored-draws", opt.stored_draws,
                  "posterior draws stored in the artifact");
  cmd->add_option("--seed", opt.seed, "master seed (COHORT_SBI_SEED overrides)");
}

SnpeConfig make_snpe_config(const SnpeOpts& opt, int scenario, std::uint64_t seed) {
  SnpeConfig cfg;
  cfg.rounds = opt.rounds;
  cfg.n_sim = opt.sims;
  cfg.n_women = opt.n_women;
  cfg.scenario = scenario;
  cfg.seed = seed;
  cfg.n_stored_draws = opt.stored_draws;
  return cfg;
}

Manifest snpe_manifest(const SnpeOpts& opt, const PriorOpts& prior,
                       std::uint64_t seed) {
  Manifest m;
  m.emplace_back("scenario", std::to_string(prior.scenario));
  m.emplace_back("rounds", std::to_string(opt.rounds));
  m.emplace_back("sims", std::to_string(opt.sims));
  m.emplace_back("n_women", std::to_string(opt.n_women));
  m.emplace_back("stored_draws", std::to_string(opt.stored_draws));
  m.emplace_back("seed", std::to_string(seed));
  if (!prior.mu_d_hist.empty()) m.emplace_back("mu_d_hist", prior.mu_d_hist);
  if (!prior.delta_r_hist.empty()) m.emplace_back("delta_r_hist", prior.delta_r_hist);
  if (!prior.mu_b_hist.empty()) m.emplace_back("mu_b_hist", prior.mu_b_hist);
  m.emplace_back("kappa_a", format_double(prior.kappa_a));
  m.emplace_back("kappa_b", format_double(prior.kappa_b));
  return m;
}

// ---------------------------------------------------------------------------
// infer

struct InferOpts {
  std::string asfr_path, asufr_path, label;
  PriorOpts prior;
  SnpeOpts snpe;
  std::string out_dir;
};

void run_infer(const InferOpts& opt, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(opt.snpe.seed);
  const Prior prior = build_prior_from_opts(opt.prior);
  const ObservedData observed =
      load_observed({opt.asfr_path, opt.asufr_path, "", "", "", opt.label});
  const SummaryLayout layout = layout_for_scenario(opt.prior.scenario);
  const SummaryVector x_o = observed.summary(layout);

  const SnpeConfig cfg = make_snpe_config(opt.snpe, opt.prior.scenario, seed);
  const SimulatorFn simulator = make_cohort_simulator(cfg.n_women, layout);
  out << "running " << cfg.rounds << " rounds x " << cfg.n_sim
      << " simulations (scenario " << opt.prior.scenario << ", layout "
      << to_string(layout) << ")\n";
  const PosteriorArtifact artifact = run_snpe(x_o.values, prior, cfg, simulator);

  save_artifact(opt.out_dir, artifact, prior, opt.prior.scenario);
  write_param_summaries(path_in(opt.out_dir, "summary.txt"),
                        summarize_draws(artifact.stored_draws));
  Manifest extra = snpe_manifest(opt.snpe, opt.prior, seed);
  extra.emplace_back("asfr", opt.asfr_path);
  if (!opt.asufr_path.empty()) extra.emplace_back("asufr", opt.asufr_path);
  write_run_manifest(opt.out_dir, "infer", std::move(extra));

  for (const RoundLog& r : artifact.rounds)
    out << "round " << r.round << ": n=" << r.n_cumulative
        << " val_loss=" << r.best_val_loss << " epochs=" << r.epochs
        << " leakage=" << r.leakage << '\n';
  out << "artifact in " << opt.out_dir << '\n';
}

// ---------------------------------------------------------------------------
// cross-validate

struct CvOpts {
  int folds = 5;
  PriorOpts prior;
  SnpeOpts snpe;
  std::string out_dir;
};

void run_cross_validate(const CvOpts& opt, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(opt.snpe.seed);
  const Prior prior = build_prior_from_opts(opt.prior);
  const SummaryLayout layout = layout_for_scenario(opt.prior.scenario);
  const SimulatorFn simulator = make_cohort_simulator(opt.snpe.n_women, layout);

  const InferenceFn infer = [&](const std::vector<double>& x_o,
                                std::uint64_t fold_seed) {
    SnpeConfig cfg = make_snpe_config(opt.snpe, opt.prior.scenario, fold_seed);
    const PosteriorArtifact artifact = run_snpe(x_o, prior, cfg, simulator);
    std::vector<double> mean;
    for (const ParamSummary& s : summarize_draws(artifact.stored_draws))
      mean.push_back(s.mean);
    return mean;
  };

  const CvReport report =
      cross_validate(prior, "scenario-" + std::to_string(opt.prior.scenario),
                     opt.folds, seed, simulator, infer);

  fs::create_directories(opt.out_dir);
  {
    std::ofstream f(path_in(opt.out_dir, "cv_folds.csv"));
    if (!f) throw IoError("cannot write cv_folds.csv");
    f << "fold,seed,failed";
    for (auto name : kParamNames) f << ",truth_" << name;
    for (auto name : kParamNames) f << ",est_" << name;
    f << '\n';
    for (const CvFold& fold : report.folds) {
      f << fold.fold << ',' << fold.seed << ',' << (fold.failed ? 1 : 0);
      for (double v : fold.truth) f << ',' << format_double(v);
      if (fold.failed)
        for (int p = 0; p < kNumParams; ++p) f << ",nan";
      else
        for (double v : fold.estimate) f << ',' << format_double(v);
      f << '\n';
    }
  }
  {
    std::ofstream f(path_in(opt.out_dir, "cv_rmse.csv"));
    if (!f) throw IoError("cannot write cv_rmse.csv");
    f << "param,nrmse\n";
    for (int p = 0; p < kNumParams; ++p)
      f << kParamNames[p] << ','
        << (report.nrmse.empty() ? "nan" : format_double(report.nrmse[p])) << '\n';
  }
  {
    std::ofstream f(path_in(opt.out_dir, "cv_summary.txt"));
    if (!f) throw IoError("cannot write cv_summary.txt");
    f << "scenario=" << report.scenario_label << '\n';
    f << "folds=" << opt.folds << '\n';
    f << "failed=" << report.n_failed << '\n';
    if (!report.nrmse.empty())
      for (int p = 0; p < kNumParams; ++p)
        f << "nrmse." << kParamNames[p] << '=' << format_double(report.nrmse[p])
          << '\n';
    for (const CvFold& fold : report.folds)
      if (fold.failed)
        f << "fold_" << fold.fold << "_error=" << one_line(fold.error) << '\n';
  }
  Manifest extra = snpe_manifest(opt.snpe, opt.prior, seed);
  extra.emplace_back("folds", std::to_string(opt.folds));
  write_run_manifest(opt.out_dir, "cross-validate", std::move(extra));

  out << "cross-validation: " << opt.folds << " folds, " << report.n_failed
      << " failed\n";
  if (!report.nrmse.empty())
    for (int p = 0; p < kNumParams; ++p)
      out << "nrmse " << kParamNames[p] << " = " << report.nrmse[p] << '\n';
  for (const CvFold& fold : report.folds)
    if (fold.failed)
      out << "fold " << fold.fold << " failed: " << one_line(fold.error) << '\n';
  out << "reports in " << opt.out_dir << '\n';
}

// ---------------------------------------------------------------------------
// ppc

struct PpcOpts {
  std::string artifact_dir;
  std::string asfr_path, asufr_path;
  int draws = 500;
  std::uint32_t n_women = 0;  // 0: reuse the artifact's cohort size
  std::uint64_t seed = 1;
  std::string out_dir;
};

void run_ppc(const PpcOpts& opt, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(opt.seed);
  LoadedArtifact loaded = load_artifact(opt.artifact_dir);
  const SummaryLayout layout = layout_for_scenario(loaded.scenario);
  const ObservedData observed =
      load_observed({opt.asfr_path, opt.asufr_path, "", "", "", ""});
  const SummaryVector x = observed.summary(layout);
  if (x.values.size() != loaded.artifact.x_o.size())
    throw ConsistencyError("observed layout does not match the artifact");

  const std::uint32_t n_women =
      opt.n_women ? opt.n_women : loaded.artifact.config.n_women;
  const PpcReport report = posterior_predictive_check(
      loaded.artifact, loaded.prior, x.values, opt.draws,
      make_cohort_simulator(n_women, layout), seed);

  fs::create_directories(opt.out_dir);
  write_ppc_csv(path_in(opt.out_dir, "ppc.csv"), report);
  {
    std::ofstream f(path_in(opt.out_dir, "ppc_summary.txt"));
    if (!f) throw IoError("cannot write ppc_summary.txt");
    f << "coverage=" << format_double(report.coverage) << '\n';
    f << "draws=" << report.n_draws << '\n';
    f << "n_women=" << n_women << '\n';
  }
  Manifest extra;
  extra.emplace_back("artifact", opt.artifact_dir);
  extra.emplace_back("asfr", opt.asfr_path);
  if (!opt.asufr_path.empty()) extra.emplace_back("asufr", opt.asufr_path);
  extra.emplace_back("draws", std::to_string(opt.draws));
  extra.emplace_back("n_women", std::to_string(n_women));
  extra.emplace_back("seed", std::to_string(seed));
  write_run_manifest(opt.out_dir, "ppc", std::move(extra));

  out << "ppc coverage " << report.coverage << " over "
      << report.observed.size() << " summary dimensions\n";
  out << "reports in " << opt.out_dir << '\n';
}

// ---------------------------------------------------------------------------
// validate-micro

struct MicroOpts {
  std::string artifact_dir;
  std::string age_first_sex, desired_family_size, birth_intervals;
  std::uint32_t n_women = 10000;
  int draws = 2000;
  std::uint64_t seed = 1;
  std::string out_dir;
};

void run_validate_micro(const MicroOpts& opt, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(opt.seed);
  LoadedArtifact loaded = load_artifact(opt.artifact_dir);
  const std::vector<ParamSummary> summaries = posterior_summaries(
      loaded.artifact, loaded.prior, opt.draws, derive_seed(seed, 1));
  std::vector<double> mean;
  for (const ParamSummary& s : summaries) mean.push_back(s.mean);
  const ParameterVector theta_hat = ParameterVector::from_span(mean);
  theta_hat.validate();

  MicroDistributions observed;
  observed.age_first_sex = load_histogram_csv(opt.age_first_sex);
  observed.desired_family_size = load_histogram_csv(opt.desired_family_size);
  observed.birth_intervals = load_histogram_csv(opt.birth_intervals);

  const MicroValidationReport report =
      validate_micro(theta_hat, observed, opt.n_women, derive_seed(seed, 2));

  fs::create_directories(opt.out_dir);
  {
    std::ofstream f(path_in(opt.out_dir, "micro_js.csv"));
    if (!f) throw IoError("cannot write micro_js.csv");
    f << "outcome,js_bits\n";
    f << "age_first_sex," << format_double(report.js_age_first_sex) << '\n';
    f << "desired_family_size," << format_double(report.js_desired_family_size)
      << '\n';
    f << "birth_intervals," << format_double(report.js_birth_intervals) << '\n';
  }
  write_histogram_csv(path_in(opt.out_dir, "simulated_age_first_sex.csv"),
                      report.simulated.age_first_sex);
  write_histogram_csv(path_in(opt.out_dir, "simulated_desired_family_size.csv"),
                      report.simulated.desired_family_size);
  write_histogram_csv(path_in(opt.out_dir, "simulated_birth_intervals.csv"),
                      report.simulated.birth_intervals);
  {
    std::ofstream f(path_in(opt.out_dir, "micro_summary.txt"));
    if (!f) throw IoError("cannot write micro_summary.txt");
    f << "js_bits.age_first_sex=" << format_double(report.js_age_first_sex) << '\n';
    f << "js_bits.desired_family_size="
      << format_double(report.js_desired_family_size) << '\n';
    f << "js_bits.birth_intervals=" << format_double(report.js_birth_intervals)
      << '\n';
    f << "n_women=" << opt.n_women << '\n';
  }

  Manifest extra;
  extra.emplace_back("artifact", opt.artifact_dir);
  extra.emplace_back("n_women", std::to_string(opt.n_women));
  extra.emplace_back("draws", std::to_string(opt.draws));
  extra.emplace_back("seed", std::to_string(seed));
  std::ostringstream theta_ss;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    if (i) theta_ss << ',';
    theta_ss << format_double(mean[i]);
  }
  extra.emplace_back("theta_hat", theta_ss.str());
  write_run_manifest(opt.out_dir, "validate-micro", std::move(extra));

  out << "js age_first_sex " << report.js_age_first_sex << " bits\n";
  out << "js desired_family_size " << report.js_desired_family_size << " bits\n";
  out << "js birth_intervals " << report.js_birth_intervals << " bits\n";
  out << "reports in " << opt.out_dir << '\n';
}

// ---------------------------------------------------------------------------
// fit-priors

struct FitPriorsOpts {
  PriorOpts prior;
  std::uint64_t seed = 1;
  std::string out_path = "priors.manifest";
};

void run_fit_priors(const FitPriorsOpts& opt, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(opt.seed);
  const Prior prior = build_prior_from_opts(opt.prior);
  write_prior_manifest(prior, opt.prior.scenario, opt.out_path);
  out << "wrote " << opt.out_path << '\n';
  for (double age : {20.0, 25.0, 30.0}) {
    const FecundabilityEnvelope env =
        fecundability_prior_envelope(prior, age, 10000, seed);
    out << "fecundability envelope at age " << age << ": [" << env.q025 << ", "
        << env.q975 << "]\n";
  }
}

}  // namespace

int cli_dispatch(std::vector<std::string> args, std::ostream& out,
                 std::ostream& err) {
  CLI::App app{"individual-level fertility simulation and likelihood-free "
               "inference from age-specific rates"};
  app.set_version_flag("--version", kVersion);
  int threads = 0;
  app.add_option("--threads", threads,
                 "cap worker threads (default: all cores; never changes results)");
  app.require_subcommand(1);

  SimulateOpts sim_opt;
  CLI::App* sim = app.add_subcommand("simulate", "simulate one cohort");
  sim->add_option("--theta", sim_opt.theta_csv,
                  "11 comma-separated parameter values: mu_s,sigma_s,delta_r,"
                  "sigma_r,mu_d,sigma_d,mu_b,sigma_b,kappa,beta1,beta2")
      ->required();
  sim->add_option("--n-women", sim_opt.n_women, "cohort size");
  sim->add_option("--seed", sim_opt.seed, "seed (COHORT_SBI_SEED overrides)");
  sim->add_option("--layout", sim_opt.layout, "rates layout: asfr or asfr+asufr");
  sim->add_option("--out", sim_opt.out_dir, "output directory")->required();

  InferOpts infer_opt;
  CLI::App* infer = app.add_subcommand(
      "infer", "estimate the posterior from observed rates");
  infer->add_option("--asfr", infer_opt.asfr_path, "observed age,rate CSV")
      ->required();
  infer->add_option("--asufr", infer_opt.asufr_path,
                    "observed unplanned age,rate CSV (scenario 3)");
  infer->add_option("--label", infer_opt.label, "cohort label");
  add_prior_options(infer, infer_opt.prior);
  add_snpe_options(infer, infer_opt.snpe);
  infer->add_option("--out", infer_opt.out_dir, "artifact directory")->required();

  CvOpts cv_opt;
  CLI::App* cv = app.add_subcommand("cross-validate",
                                    "parameter-recovery study on synthetic data");
  cv->add_option("--folds", cv_opt.folds, "number of folds");
  add_prior_options(cv, cv_opt.prior);
  add_snpe_options(cv, cv_opt.snpe);
  cv->add_option("--out", cv_opt.out_dir, "report directory")->required();

  PpcOpts ppc_opt;
  CLI::App* ppc = app.add_subcommand("ppc", "posterior predictive check");
  ppc->add_option("--artifact", ppc_opt.artifact_dir, "artifact directory")
      ->required();
  ppc->add_option("--asfr", ppc_opt.asfr_path, "observed age,rate CSV")->required();
  ppc->add_option("--asufr", ppc_opt.asufr_path, "observed unplanned rates CSV");
  ppc->add_option("--draws", ppc_opt.draws, "posterior draws");
  ppc->add_option("--n-women", ppc_opt.n_women,
                  "cohort size per draw (default: artifact setting)");
  ppc->add_option("--seed", ppc_opt.seed, "seed (COHORT_SBI_SEED overrides)");
  ppc->add_option("--out", ppc_opt.out_dir, "report directory")->required();

  MicroOpts micro_opt;
  CLI::App* micro = app.add_subcommand(
      "validate-micro", "compare micro-level distributions at the posterior mean");
  micro->add_option("--artifact", micro_opt.artifact_dir, "artifact directory")
      ->required();
  micro->add_option("--age-first-sex", micro_opt.age_first_sex,
                    "observed histogram CSV")
      ->required();
  micro->add_option("--desired-family-size", micro_opt.desired_family_size,
                    "observed histogram CSV")
      ->required();
  micro->add_option("--birth-intervals", micro_opt.birth_intervals,
                    "observed histogram CSV")
      ->required();
  micro->add_option("--n-women", micro_opt.n_women, "cohort size");
  micro->add_option("--draws", micro_opt.draws, "draws for the posterior mean");
  micro->add_option("--seed", micro_opt.seed, "seed (COHORT_SBI_SEED overrides)");
  micro->add_option("--out", micro_opt.out_dir, "report directory")->required();

  FitPriorsOpts fit_opt;
  CLI::App* fitp = app.add_subcommand("fit-priors",
                                      "construct a scenario prior manifest");
  add_prior_options(fitp, fit_opt.prior);
  fitp->add_option("--seed", fit_opt.seed, "seed for the envelope check");
  fitp->add_option("--out", fit_opt.out_path, "manifest path");

  auto with_threads = [&threads](auto fn) {
    return [&threads, fn]() {
      if (threads > 0) set_max_threads(threads);
      fn();
    };
  };
  sim->callback(with_threads([&]() { run_simulate(sim_opt, out); }));
  infer->callback(with_threads([&]() { run_infer(infer_opt, out); }));
  cv->callback(with_threads([&]() { run_cross_validate(cv_opt, out); }));
  ppc->callback(with_threads([&]() { run_ppc(ppc_opt, out); }));
  micro->callback(with_threads([&]() { run_validate_micro(micro_opt, out); }));
  fitp->callback(with_threads([&]() { run_fit_priors(fit_opt, out); }));

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  } catch (const FormatError& e) {
    err << "error: format: " << one_line(e.what()) << '\n';
  } catch (const ConsistencyError& e) {
    err << "error: consistency: " << one_line(e.what()) << '\n';
  } catch (const ConfigError& e) {
    err << "error: config: " << one_line(e.what()) << '\n';
  } catch (const IoError& e) {
    err << "error: io: " << one_line(e.what()) << '\n';
  } catch (const LeakageError& e) {
    err << "error: leakage: " << one_line(e.what()) << '\n';
  } catch (const NumericError& e) {
    err << "error: numeric: " << one_line(e.what()) << '\n';
  } catch (const std::domain_error& e) {
    err << "error: domain: " << one_line(e.what()) << '\n';
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: io: " << one_line(e.what()) << '\n';
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << '\n';
  }
  return 1;
}

}  // namespace cohortsbi
