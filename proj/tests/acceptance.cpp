// Acceptance suite. Each criterion prints one [PASS]/[FAIL] line; the exit
// status is the number of failed criteria. Criteria can be selected by
// number on the command line (default: all).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cohortsbi/estimator.hpp"
#include "cohortsbi/math.hpp"
#include "cohortsbi/model.hpp"
#include "cohortsbi/parallel.hpp"
#include "cohortsbi/prior.hpp"
#include "cohortsbi/simulator.hpp"
#include "cohortsbi/snpe.hpp"
#include "cohortsbi/validation.hpp"
#include "../tests/test_util.hpp"

using namespace cohortsbi;

namespace {

struct CriterionResult {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (!failures_.empty()) failures_ += "; ";
      failures_ += what;
    }
  }
  void note(const std::string& s) {
    if (!notes_.empty()) notes_ += "; ";
    notes_ += s;
  }
  CriterionResult result(const std::string& headline) const {
    std::string detail = headline;
    if (!pass_) detail += " | failed: " + failures_;
    if (!notes_.empty()) detail += " | " + notes_;
    return {pass_, detail};
  }

 private:
  bool pass_ = true;
  std::string failures_;
  std::string notes_;
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

bool same_cohort(const CohortResult& a, const CohortResult& b) {
  if (a.n_women != b.n_women || a.births.size() != b.births.size()) return false;
  for (std::size_t i = 0; i < a.births.size(); ++i) {
    const BirthRecord &x = a.births[i], &y = b.births[i];
    if (x.woman_id != y.woman_id || x.mother_age_months != y.mother_age_months ||
        x.conception_month != y.conception_month || x.planned != y.planned)
      return false;
  }
  for (std::size_t i = 0; i < a.traits.size(); ++i) {
    const WomanTraits &x = a.traits[i], &y = b.traits[i];
    if (x.x_i != y.x_i || x.r_i != y.r_i || x.d_i != y.d_i || x.b_i != y.b_i)
      return false;
  }
  return true;
}

ParameterVector theta_from(const std::vector<double>& v) {
  return ParameterVector::from_span(v);
}

// ---------------------------------------------------------------------------
// Criterion 1: simulator invariants

CriterionResult criterion_1() {
  Checker check;
  check.require(fecundability(10.0, 0.7, 0.7) == 0.0, "phi(10) != 0");
  check.require(fecundability(50.0, 0.7, 0.7) == 0.0, "phi(50) != 0");

  const Prior prior = build_prior(1);
  Rng rng(20240801);
  std::uint64_t clamped = 0, evaluated = 0;
  for (int t = 0; t < 5; ++t) {
    std::vector<double> draw(kNumParams);
    prior.sample(rng, draw);
    const ParameterVector theta = theta_from(draw);
    const CohortResult r = simulate_cohort(theta, 10000, 1000 + t);

    for (std::size_t i = 1; i < r.births.size(); ++i) {
      if (r.births[i].woman_id != r.births[i - 1].woman_id) continue;
      if (r.births[i].mother_age_months - r.births[i - 1].mother_age_months < 12) {
        check.require(false, "inter-birth gap below 12 months");
        break;
      }
    }

    const auto asfr = compute_asfr(r);
    const auto asufr = compute_asufr(r);
    std::uint64_t in_window = 0;
    for (const auto& b : r.births)
      if (b.mother_age_months < kWindowEndMonth) ++in_window;
    double total = 0.0;
    for (double v : asfr) total += v;
    check.require(
        std::fabs(total - static_cast<double>(in_window) / r.n_women) <= 1e-12,
        "TFR identity violated at theta " + std::to_string(t));
    for (int a = 0; a < kNumAges; ++a)
      if (asufr[a] > asfr[a]) {
        check.require(false, "ASUFR exceeds ASFR");
        break;
      }

    // clamp audit over the monthly age grid
    for (int m = kWindowStartMonth; m < kWindowEndMonth; ++m) {
      ++evaluated;
      if (fecundability_raw(m / 12.0, theta.beta1, theta.beta2) > 1.0) ++clamped;
    }
  }

  {
    std::vector<double> draw(kNumParams);
    prior.sample(rng, draw);
    ParameterVector theta = theta_from(draw);
    theta.beta1 = 0.0;
    theta.beta2 = 0.0;
    check.require(simulate_cohort(theta, 2000, 7).births.empty(),
                  "births despite zero fecundability");
  }
  {
    std::vector<double> draw(kNumParams);
    prior.sample(rng, draw);
    ParameterVector theta = theta_from(draw);
    theta.kappa = 0.0;
    const auto asufr = compute_asufr(simulate_cohort(theta, 2000, 8));
    for (double v : asufr)
      if (v != 0.0) {
        check.require(false, "unplanned births despite kappa = 0");
        break;
      }
  }
  {
    std::vector<double> draw(kNumParams);
    prior.sample(rng, draw);
    const ParameterVector theta = theta_from(draw);
    set_max_threads(1);
    const CohortResult serial = simulate_cohort(theta, 10000, 99);
    set_max_threads(4);
    const CohortResult threaded = simulate_cohort(theta, 10000, 99);
    set_max_threads(0);
    check.require(same_cohort(serial, threaded),
                  "results depend on the worker count");
    check.require(same_cohort(serial, simulate_cohort(theta, 10000, 99)),
                  "rerun differs under a fixed seed");
  }

  check.note("clamp frequency " +
             fmt(static_cast<double>(clamped) / static_cast<double>(evaluated)));
  return check.result("simulator invariants over 5 prior draws x 10k women");
}

// ---------------------------------------------------------------------------
// Criterion 2: moment-conversion oracles

CriterionResult criterion_2() {
  Checker check;
  const int n = 1000000;
  {
    Rng rng(11);
    std::vector<double> draws(n);
    for (double& d : draws) d = sample_lognormal_moments(18.0, 3.0, rng);
    const auto mc = testutil::sample_moments(draws);
    check.require(std::fabs(mc.mean - 18.0) < 3.0 * mc.se_mean,
                  "lognormal mean off: " + fmt(mc.mean));
    check.require(std::fabs(mc.sd - 3.0) < 3.0 * mc.se_sd,
                  "lognormal sd off: " + fmt(mc.sd));
    check.note("lognormal mc mean " + fmt(mc.mean, 6) + ", sd " + fmt(mc.sd, 6));
  }
  {
    Rng rng(12);
    std::vector<double> draws(n);
    for (double& d : draws) d = sample_weibull_moments(4.5, 2.0, rng);
    const auto mc = testutil::sample_moments(draws);
    check.require(std::fabs(mc.mean - 4.5) < 3.0 * mc.se_mean,
                  "weibull mean off: " + fmt(mc.mean));
    check.require(std::fabs(mc.sd - 2.0) / 2.0 < 0.02,
                  "weibull sd beyond 2%: " + fmt(mc.sd));
    check.note("weibull mc mean " + fmt(mc.mean, 6) + ", sd " + fmt(mc.sd, 6));
  }
  return check.result("1e6-draw Monte-Carlo moment reproduction");
}

// ---------------------------------------------------------------------------
// Criterion 3: loss and gradient checks

CriterionResult criterion_3() {
  Checker check;
  const Standardizer id2 = Standardizer::identity(2);

  {
    std::vector<MarginalPrior> m;
    m.emplace_back(UniformMarginal{0.0, 1.0});
    m.emplace_back(UniformMarginal{0.0, 1.0});
    const Prior box(std::move(m));
    MdnConfig cfg;
    cfg.n_components = 4;
    cfg.hidden = {8, 8};
    const MixtureDensityNetwork net(2, 2, cfg, 5);
    Rng data_rng(1);
    RowMatrix thetas(64, 2), xs(64, 2);
    for (double& v : thetas.data) v = data_rng.uniform();
    for (double& v : xs.data) v = data_rng.uniform();

    Rng r1(2);
    check.require(atomic_apt_loss(net, id2, id2, thetas, xs, box, 1, r1) == 0.0,
                  "single-atom loss not exactly zero");

    MdnConfig flat_cfg;
    flat_cfg.n_components = 2;
    MixtureDensityNetwork flat(2, 2, flat_cfg, 1);
    auto& p = flat.parameters();
    std::fill(p.begin(), p.end(), 0.0);
    for (int i = 2 * flat_cfg.n_components + 2; i < flat.head_dim(); ++i)
      p[p.size() - flat.head_dim() + i] = 7.0;  // wide scales: flat density
    Rng r2(3);
    const double flat_loss =
        atomic_apt_loss(flat, id2, id2, thetas, xs, box, 10, r2);
    check.require(std::fabs(flat_loss - std::log(10.0)) < 1e-5,
                  "constant-output loss != log M: " + fmt(flat_loss, 10));
  }

  {
    // finite differences on a 42-weight network
    std::vector<MarginalPrior> m;
    m.emplace_back(UniformMarginal{-5.0, 5.0});
    const Prior box(std::move(m));
    MdnConfig cfg;
    cfg.n_components = 2;
    cfg.hidden = {3, 3};
    MixtureDensityNetwork net(1, 1, cfg, 13);
    check.require(net.parameters().size() <= 50, "network exceeds 50 weights");
    const Standardizer id1 = Standardizer::identity(1);
    Rng data_rng(31);
    RowMatrix thetas(6, 1), xs(6, 1);
    for (double& v : thetas.data) v = data_rng.uniform(-4.0, 4.0);
    for (double& v : xs.data) v = data_rng.uniform(-1.0, 1.0);

    auto loss_at = [&]() {
      Rng rng(7);
      return atomic_apt_loss(net, id1, id1, thetas, xs, box, 3, rng, nullptr);
    };
    std::vector<double> grad;
    {
      Rng rng(7);
      atomic_apt_loss(net, id1, id1, thetas, xs, box, 3, rng, &grad);
    }
    double worst = 0.0;
    auto& params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      const double h = 1e-5 * std::max(1.0, std::fabs(saved));
      params[i] = saved + h;
      const double up = loss_at();
      params[i] = saved - h;
      const double down = loss_at();
      params[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({std::fabs(fd), std::fabs(grad[i]), 1e-8});
      worst = std::max(worst, std::fabs(grad[i] - fd) / denom);
    }
    check.require(worst < 1e-4, "gradient mismatch " + fmt(worst));
    check.note("max relative gradient error " + fmt(worst));
  }
  return check.result("atomic loss special values and finite-difference gradients");
}

// ---------------------------------------------------------------------------
// Criterion 4: conjugate linear-Gaussian oracle

CriterionResult criterion_4() {
  Checker check;
  const std::vector<double> a{1.0, 0.5, -0.3, 1.2, 0.8, -0.7};  // 3x2
  const double noise_sd = 0.5, prior_sd = 1.0;
  const std::vector<double> prior_mean{0.0, 0.0};
  const testutil::GaussianPrior prior(prior_mean, {prior_sd, prior_sd});
  const SimulatorFn simulator =
      testutil::make_linear_gaussian_simulator(a, 3, 2, noise_sd);

  for (std::uint64_t seed : {101ULL, 202ULL, 303ULL}) {
    Rng truth_rng(seed);
    std::vector<double> truth(2);
    prior.sample(truth_rng, truth);
    const std::vector<double> x_o = simulator(truth, seed * 7 + 1);
    const testutil::GaussianPosterior expected = testutil::linear_gaussian_posterior(
        a, 3, noise_sd, prior_mean, prior_sd, x_o);

    SnpeConfig cfg;
    cfg.rounds = 3;
    cfg.n_sim = 1000;
    cfg.seed = seed;
    cfg.n_stored_draws = 2000;
    const PosteriorArtifact artifact = run_snpe(x_o, prior, cfg, simulator);
    const auto s = summarize_draws(artifact.stored_draws);
    for (int p = 0; p < 2; ++p) {
      check.require(
          std::fabs(s[p].mean - expected.mean[p]) < 3.0 * expected.sd[p],
          "seed " + std::to_string(seed) + " mean[" + std::to_string(p) +
              "] = " + fmt(s[p].mean) + " vs " + fmt(expected.mean[p]) +
              " (sd " + fmt(expected.sd[p]) + ")");
      check.require(
          s[p].sd < 1.5 * expected.sd[p] && s[p].sd > expected.sd[p] / 1.5,
          "seed " + std::to_string(seed) + " sd[" + std::to_string(p) + "] = " +
              fmt(s[p].sd) + " vs " + fmt(expected.sd[p]));
    }
    std::cerr << "  [criterion 4] seed " << seed << ": mean (" << fmt(s[0].mean)
              << ", " << fmt(s[1].mean) << ") expected (" << fmt(expected.mean[0])
              << ", " << fmt(expected.mean[1]) << ")\n";
  }
  return check.result(
      "3-round sequential runs recover the conjugate posterior, 3 seeds");
}

// ---------------------------------------------------------------------------
// Criteria 5 and 7 share the cross-validation folds.

struct CvComputation {
  CvReport report;
  SnpeConfig config;
};

CvComputation run_cv_folds() {
  const Prior prior = build_prior(1);
  SnpeConfig cfg;
  cfg.rounds = 3;
  cfg.n_sim = 1000;
  cfg.n_women = 2000;
  cfg.scenario = 1;
  cfg.n_stored_draws = 2000;
  const SimulatorFn simulator =
      make_cohort_simulator(cfg.n_women, SummaryLayout::kAsfrOnly);

  const InferenceFn infer = [&, cfg](const std::vector<double>& x_o,
                                     std::uint64_t fold_seed) {
    SnpeConfig fold_cfg = cfg;
    fold_cfg.seed = fold_seed;
    const PosteriorArtifact artifact = run_snpe(x_o, prior, fold_cfg, simulator);
    std::vector<double> mean;
    for (const ParamSummary& s : summarize_draws(artifact.stored_draws))
      mean.push_back(s.mean);
    return mean;
  };

  CvComputation out;
  out.config = cfg;
  const std::uint64_t master_seed = 424242;
  out.report = cross_validate(prior, "scenario-1", 5, master_seed,
                              [&](std::span<const double> theta, std::uint64_t s) {
                                std::cerr << "  [cv] simulating fold data\n";
                                return simulator(theta, s);
                              },
                              infer);
  return out;
}

CriterionResult criterion_5(const CvComputation& cv) {
  Checker check;
  check.require(cv.report.n_failed == 0,
                std::to_string(cv.report.n_failed) + " folds failed");
  if (!cv.report.nrmse.empty()) {
    std::ostringstream all;
    for (int p = 0; p < kNumParams; ++p) {
      if (p) all << ' ';
      all << kParamNames[p] << '=' << fmt(cv.report.nrmse[p], 3);
    }
    check.note("nrmse " + all.str());
    for (int p : {0, 4, 8, 9, 10}) {  // mu_s, mu_d, kappa, beta1, beta2
      check.require(cv.report.nrmse[p] < 0.35,
                    std::string(kParamNames[p]) + " nrmse " +
                        fmt(cv.report.nrmse[p], 3) + " >= 0.35");
    }
  } else {
    check.require(false, "no successful folds");
  }
  return check.result("5-fold scenario-1 recovery, R=3 x 1000 sims x 2000 women");
}

CriterionResult criterion_7(const CvComputation& cv) {
  Checker check;

  {  // two independent cohorts at one parameter vector
    const Prior prior = build_prior(1);
    Rng rng(777);
    std::vector<double> draw(kNumParams);
    prior.sample(rng, draw);
    const ParameterVector theta = theta_from(draw);
    const MicroDistributions observed =
        extract_micro_distributions(simulate_cohort(theta, 10000, 31));
    const MicroValidationReport rep = validate_micro(theta, observed, 10000, 32);
    check.require(rep.js_age_first_sex < 0.02,
                  "same-theta age_first_sex js " + fmt(rep.js_age_first_sex));
    check.require(rep.js_desired_family_size < 0.02,
                  "same-theta desired_family_size js " +
                      fmt(rep.js_desired_family_size));
    check.require(rep.js_birth_intervals < 0.02,
                  "same-theta birth_intervals js " + fmt(rep.js_birth_intervals));
    check.note("same-theta js: afs " + fmt(rep.js_age_first_sex, 3) + ", dfs " +
               fmt(rep.js_desired_family_size, 3) + ", bi " +
               fmt(rep.js_birth_intervals, 3));
  }

  double worst = 0.0;
  for (const CvFold& fold : cv.report.folds) {
    if (fold.failed) {
      check.require(false, "fold " + std::to_string(fold.fold) + " failed");
      continue;
    }
    const ParameterVector truth = theta_from(fold.truth);
    const ParameterVector estimate = theta_from(fold.estimate);
    const MicroDistributions observed = extract_micro_distributions(
        simulate_cohort(truth, 10000, derive_seed(fold.seed, 91)));
    const MicroValidationReport rep =
        validate_micro(estimate, observed, 10000, derive_seed(fold.seed, 92));
    for (double js : {rep.js_age_first_sex, rep.js_desired_family_size,
                      rep.js_birth_intervals})
      worst = std::max(worst, js);
    check.require(rep.js_age_first_sex < 0.15,
                  "fold " + std::to_string(fold.fold) + " age_first_sex js " +
                      fmt(rep.js_age_first_sex));
    check.require(rep.js_desired_family_size < 0.15,
                  "fold " + std::to_string(fold.fold) + " desired_family_size js " +
                      fmt(rep.js_desired_family_size));
    check.require(rep.js_birth_intervals < 0.15,
                  "fold " + std::to_string(fold.fold) + " birth_intervals js " +
                      fmt(rep.js_birth_intervals));
  }
  check.note("worst recovered-theta js " + fmt(worst, 3));
  return check.result("micro-distribution divergence oracles");
}

// ---------------------------------------------------------------------------
// Criterion 6: posterior predictive self-consistency

CriterionResult criterion_6() {
  Checker check;
  const Prior prior = build_prior(1);
  Rng rng(616161);
  std::vector<double> draw(kNumParams);
  prior.sample(rng, draw);

  SnpeConfig cfg;
  cfg.rounds = 3;
  cfg.n_sim = 1000;
  cfg.n_women = 2000;
  cfg.seed = 987;
  cfg.n_stored_draws = 2000;
  const SimulatorFn simulator =
      make_cohort_simulator(cfg.n_women, SummaryLayout::kAsfrOnly);
  const std::vector<double> x_o = simulator(draw, 55);

  const PosteriorArtifact artifact = run_snpe(x_o, prior, cfg, simulator);
  const PpcReport report =
      posterior_predictive_check(artifact, prior, x_o, 500, simulator, 77);
  check.require(report.coverage >= 0.9,
                "coverage " + fmt(report.coverage) + " below 0.9");
  check.note("coverage " + fmt(report.coverage, 3) + " over 40 ages, 500 draws");
  return check.result("posterior predictive bands cover the generating data");
}

// ---------------------------------------------------------------------------
// Criterion 8: prior fitting

CriterionResult criterion_8() {
  Checker check;
  for (auto [lo, hi] : {std::pair{14.4, 28.9}, std::pair{1.9, 8.1}}) {
    const GammaMarginal g = fit_gamma_to_quantiles(lo, hi);
    const double q025 = math::gamma_quantile(g.shape, 0.025) / g.rate;
    const double q975 = math::gamma_quantile(g.shape, 0.975) / g.rate;
    check.require(std::fabs(q025 - lo) / lo < 1e-6,
                  "q025 " + fmt(q025, 9) + " vs " + fmt(lo));
    check.require(std::fabs(q975 - hi) / hi < 1e-6,
                  "q975 " + fmt(q975, 9) + " vs " + fmt(hi));
  }
  const Prior prior = build_prior(1);
  for (double age : {20.0, 25.0}) {
    const FecundabilityEnvelope env =
        fecundability_prior_envelope(prior, age, 10000, 8);
    check.require(env.q025 <= 0.15, "age " + fmt(age) + " lower envelope " +
                                        fmt(env.q025) + " above 0.15");
    check.require(env.q975 >= 0.35, "age " + fmt(age) + " upper envelope " +
                                        fmt(env.q975) + " below 0.35");
    check.note("envelope at " + fmt(age, 2) + ": [" + fmt(env.q025, 3) + ", " +
               fmt(env.q975, 3) + "]");
  }
  return check.result("gamma quantile fits and fecundability prior envelope");
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> criteria;
  for (int i = 1; i < argc; ++i) criteria.push_back(std::atoi(argv[i]));
  if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6, 7, 8};
  std::sort(criteria.begin(), criteria.end());
  criteria.erase(std::unique(criteria.begin(), criteria.end()), criteria.end());

  std::optional<CvComputation> cv;
  auto get_cv = [&]() -> const CvComputation& {
    if (!cv) {
      std::cerr << "  [cv] running 5 folds (3 rounds x 1000 sims each)...\n";
      cv = run_cv_folds();
    }
    return *cv;
  };

  int failures = 0;
  for (int c : criteria) {
    CriterionResult r;
    switch (c) {
      case 1: r = criterion_1(); break;
      case 2: r = criterion_2(); break;
      case 3: r = criterion_3(); break;
      case 4: r = criterion_4(); break;
      case 5: r = criterion_5(get_cv()); break;
      case 6: r = criterion_6(); break;
      case 7: r = criterion_7(get_cv()); break;
      case 8: r = criterion_8(); break;
      default:
        r = {false, "unknown criterion"};
    }
    std::printf("[%s] criterion %d: %s\n", r.pass ? "PASS" : "FAIL", c,
                r.detail.c_str());
    std::fflush(stdout);
    if (!r.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
