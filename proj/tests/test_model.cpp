#include "cohortsbi/model.hpp"

#include <cmath>
#include <doctest.h>
#include <stdexcept>

#include "cohortsbi/errors.hpp"
#include "test_util.hpp"

using namespace cohortsbi;

namespace {

ParameterVector reference_theta() {
  ParameterVector t{};
  t.mu_s = 18.0;
  t.sigma_s = 3.0;
  t.delta_r = 4.0;
  t.sigma_r = 3.0;
  t.mu_d = 3.0;
  t.sigma_d = 1.5;
  t.mu_b = 30.0;
  t.sigma_b = 10.0;
  t.kappa = 0.2;
  t.beta1 = 0.4;
  t.beta2 = 0.2;
  return t;
}

}  // namespace

TEST_CASE("parameter vector round-trips through its array layout") {
  const ParameterVector t = reference_theta();
  const auto a = t.to_array();
  CHECK(a[0] == 18.0);
  CHECK(a[8] == 0.2);
  const ParameterVector back = ParameterVector::from_span(a);
  CHECK(back.to_array() == a);
  CHECK_THROWS_AS(ParameterVector::from_span(std::vector<double>(10, 1.0)),
                  ContractError);
}

TEST_CASE("parameter invariants are enforced") {
  ParameterVector t = reference_theta();
  CHECK_NOTHROW(t.validate());
  t.kappa = 1.0;
  CHECK_THROWS_AS(t.validate(), std::domain_error);
  t = reference_theta();
  t.sigma_d = 0.0;
  CHECK_THROWS_AS(t.validate(), std::domain_error);
  t = reference_theta();
  t.sigma_s = 0.0;  // zero dispersion is allowed outside sigma_d
  CHECK_NOTHROW(t.validate());
}

TEST_CASE("lognormal moment conversion") {
  SUBCASE("zero sd degenerates to a point mass at the mean") {
    const auto p = lognormal_params_from_moments(18.0, 0.0);
    CHECK(p.mu_ln == doctest::Approx(std::log(18.0)).epsilon(1e-15));
    CHECK(p.sigma_ln == 0.0);
  }
  SUBCASE("frozen values for (18, 3)") {
    const auto p = lognormal_params_from_moments(18.0, 3.0);
    CHECK(p.mu_ln == doctest::Approx(2.8766722708021075).epsilon(1e-12));
    CHECK(p.sigma_ln == doctest::Approx(0.16552635496534787).epsilon(1e-12));
  }
  SUBCASE("round trip: converted distribution has the requested moments") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
      const double mean = rng.uniform(0.1, 80.0);
      const double sd = rng.uniform(0.0, 20.0);
      const auto p = lognormal_params_from_moments(mean, sd);
      const double m = std::exp(p.mu_ln + 0.5 * p.sigma_ln * p.sigma_ln);
      const double v = (std::exp(p.sigma_ln * p.sigma_ln) - 1.0) *
                       std::exp(2.0 * p.mu_ln + p.sigma_ln * p.sigma_ln);
      CHECK(m == doctest::Approx(mean).epsilon(1e-10));
      CHECK(std::sqrt(v) == doctest::Approx(sd).epsilon(1e-7));
    }
  }
  SUBCASE("Monte-Carlo draws reproduce the target moments") {
    Rng rng(42);
    std::vector<double> draws(1000000);
    for (double& d : draws) d = sample_lognormal_moments(18.0, 3.0, rng);
    const auto mc = testutil::sample_moments(draws);
    CHECK(std::fabs(mc.mean - 18.0) < 3.0 * mc.se_mean);
    CHECK(std::fabs(mc.sd - 3.0) < 3.0 * mc.se_sd);
  }
  SUBCASE("domain errors") {
    CHECK_THROWS_AS(lognormal_params_from_moments(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(lognormal_params_from_moments(-2.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(lognormal_params_from_moments(2.0, -1.0), std::domain_error);
  }
}

TEST_CASE("weibull moment conversion") {
  SUBCASE("unit ratio gives the exponential") {
    const auto p = weibull_params_from_moments(3.0, 3.0);
    CHECK(p.alpha == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.lambda == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("frozen values for (4.5, 2)") {
    const auto p = weibull_params_from_moments(4.5, 2.0);
    CHECK(p.alpha == doctest::Approx(2.4125160687025926).epsilon(1e-12));
    CHECK(p.lambda == doctest::Approx(5.0757450858353685).epsilon(1e-12));
  }
  SUBCASE("scale equivariance") {
    const auto base = weibull_params_from_moments(4.5, 2.0);
    for (double c : {0.2, 3.0, 11.0}) {
      const auto scaled = weibull_params_from_moments(4.5 * c, 2.0 * c);
      CHECK(scaled.alpha == doctest::Approx(base.alpha).epsilon(1e-12));
      CHECK(scaled.lambda == doctest::Approx(base.lambda * c).epsilon(1e-12));
    }
  }
  SUBCASE("Monte-Carlo draws: exact mean, sd within the approximation error") {
    Rng rng(43);
    std::vector<double> draws(1000000);
    for (double& d : draws) d = sample_weibull_moments(4.5, 2.0, rng);
    const auto mc = testutil::sample_moments(draws);
    CHECK(std::fabs(mc.mean - 4.5) < 3.0 * mc.se_mean);
    // the shape formula is approximate: sd is reproduced to ~2 percent
    CHECK(std::fabs(mc.sd - 2.0) / 2.0 < 0.02);
  }
  SUBCASE("domain errors") {
    CHECK_THROWS_AS(weibull_params_from_moments(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(weibull_params_from_moments(3.0, 0.0), std::domain_error);
  }
}

TEST_CASE("fecundability curve") {
  SUBCASE("zero at both window endpoints for any coefficients") {
    for (double b1 : {0.0, 0.3, 0.9, 5.0})
      for (double b2 : {0.0, 0.5, 0.9}) {
        CHECK(fecundability(10.0, b1, b2) == 0.0);
        CHECK(fecundability(50.0, b1, b2) == 0.0);
      }
  }
  SUBCASE("midpoint value") {
    CHECK(fecundability(30.0, 0.4, 0.2) == doctest::Approx(0.225).epsilon(1e-12));
  }
  SUBCASE("clamped to [0, 1]") {
    CHECK(fecundability(30.0, 10.0, 10.0) == 1.0);
    CHECK(fecundability_raw(30.0, 10.0, 10.0) == doctest::Approx(7.5));
  }
  SUBCASE("non-negative over the window for non-negative coefficients") {
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
      const double age = rng.uniform(10.0, 50.0);
      const double phi = fecundability(age, rng.uniform(0.0, 2.0), rng.uniform(0.0, 2.0));
      CHECK(phi >= 0.0);
      CHECK(phi <= 1.0);
    }
  }
  SUBCASE("domain errors outside [10, 50]") {
    CHECK_THROWS_AS(fecundability(9.99, 0.1, 0.1), std::domain_error);
    CHECK_THROWS_AS(fecundability(50.01, 0.1, 0.1), std::domain_error);
  }
}

TEST_CASE("sample_woman") {
  SUBCASE("zero-dispersion traits are deterministic") {
    ParameterVector t = reference_theta();
    t.sigma_s = 0.0;
    t.sigma_r = 0.0;
    t.sigma_b = 0.0;
    Rng rng(1);
    const WomanTraits w = sample_woman(t, rng);
    CHECK(w.x_i == doctest::Approx(12.0 * 18.0).epsilon(1e-12));
    CHECK(w.r_i == doctest::Approx(12.0 * 22.0).epsilon(1e-12));
    CHECK(w.b_i == doctest::Approx(30.0).epsilon(1e-12));
  }
  SUBCASE("desired family size rounds to the nearest integer") {
    // the sd = 0 sampler branch pins the continuous draw exactly
    ParameterVector t = reference_theta();
    t.sigma_d = 0.0;
    t.mu_d = 2.4;
    Rng rng(1);
    CHECK(sample_woman(t, rng).d_i == 2);
    t.mu_d = 2.6;
    CHECK(sample_woman(t, rng).d_i == 3);
  }
  SUBCASE("Monte-Carlo mean age at initiation") {
    const ParameterVector t = reference_theta();
    Rng rng(11);
    std::vector<double> years;
    years.reserve(100000);
    for (int i = 0; i < 100000; ++i)
      years.push_back(sample_woman(t, rng).x_i / 12.0);
    const auto mc = testutil::sample_moments(years);
    CHECK(std::fabs(mc.mean - 18.0) < 3.0 * mc.se_mean);
  }
  SUBCASE("same seed gives identical traits") {
    const ParameterVector t = reference_theta();
    Rng a(99), b(99);
    for (int i = 0; i < 50; ++i) {
      const WomanTraits wa = sample_woman(t, a);
      const WomanTraits wb = sample_woman(t, b);
      CHECK(wa.x_i == wb.x_i);
      CHECK(wa.r_i == wb.r_i);
      CHECK(wa.d_i == wb.d_i);
      CHECK(wa.b_i == wb.b_i);
    }
  }
}

TEST_CASE("conception probability") {
  const ParameterVector theta = reference_theta();
  WomanTraits w{};
  w.x_i = 12.0 * 16.0;  // 192
  w.r_i = 12.0 * 24.0;  // 288
  w.d_i = 2;
  w.b_i = 24.0;

  SUBCASE("non-susceptible months have zero probability") {
    const auto d = conception_probability(w, 1, 5, 300, theta, false);
    CHECK(d.probability == 0.0);
    CHECK(d.state == IntentState::kNonSusceptible);
  }
  SUBCASE("before sexual initiation") {
    const auto d = conception_probability(w, 0, std::nullopt, 150, theta, true);
    CHECK(d.probability == 0.0);
    CHECK(d.state == IntentState::kNotYetActive);
  }
  SUBCASE("active but before intentional reproduction: contracepting") {
    const int m = 240;
    const auto d = conception_probability(w, 0, std::nullopt, m, theta, true);
    CHECK(d.state == IntentState::kContracepting);
    CHECK(d.probability ==
          doctest::Approx(theta.kappa *
                          fecundability(m / 12.0, theta.beta1, theta.beta2)));
  }
  SUBCASE("trying exactly matches the fecundability curve") {
    const int m = 300;
    const auto d = conception_probability(w, 0, std::nullopt, m, theta, true);
    CHECK(d.state == IntentState::kTrying);
    CHECK(d.probability == fecundability(m / 12.0, theta.beta1, theta.beta2));
  }
  SUBCASE("desired parity reached: failure rate squared") {
    const int m = 330;
    const auto d = conception_probability(w, 2, 40, m, theta, true);
    CHECK(d.state == IntentState::kContracepting);
    CHECK(d.probability ==
          doctest::Approx(theta.kappa * theta.kappa *
                          fecundability(m / 12.0, theta.beta1, theta.beta2)));
    CHECK(theta.kappa * theta.kappa < theta.kappa);
  }
  SUBCASE("spacing gates trying after a birth") {
    const int m = 330;
    const auto waiting = conception_probability(w, 1, 20, m, theta, true);
    CHECK(waiting.state == IntentState::kContracepting);
    CHECK(waiting.probability ==
          doctest::Approx(theta.kappa *
                          fecundability(m / 12.0, theta.beta1, theta.beta2)));
    const auto ready = conception_probability(w, 1, 24, m, theta, true);
    CHECK(ready.state == IntentState::kTrying);
  }
  SUBCASE("spacing is not applied at parity zero") {
    const auto d = conception_probability(w, 0, std::nullopt, 300, theta, true);
    CHECK(d.state == IntentState::kTrying);
  }
  SUBCASE("desired family size zero: always intensified contraception") {
    WomanTraits none = w;
    none.d_i = 0;
    const auto d = conception_probability(none, 0, std::nullopt, 300, theta, true);
    CHECK(d.state == IntentState::kContracepting);
    CHECK(d.probability ==
          doctest::Approx(theta.kappa * theta.kappa *
                          fecundability(25.0, theta.beta1, theta.beta2)));
  }
  SUBCASE("missing spacing clock at positive parity is a contract error") {
    CHECK_THROWS_AS(conception_probability(w, 1, std::nullopt, 300, theta, true),
                    ContractError);
  }
  SUBCASE("probability stays in [0, 1] and states are deterministic") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
      WomanTraits t{};
      t.x_i = rng.uniform(120.0, 400.0);
      t.r_i = rng.uniform(120.0, 500.0);
      t.d_i = static_cast<int>(rng.uniform_index(6));
      t.b_i = rng.uniform(1.0, 60.0);
      const int parity = static_cast<int>(rng.uniform_index(5));
      const int m = 120 + static_cast<int>(rng.uniform_index(480));
      const std::optional<int> since =
          parity > 0 ? std::optional<int>(static_cast<int>(rng.uniform_index(100)))
                     : std::nullopt;
      const auto d = conception_probability(t, parity, since, m, theta, true);
      CHECK(d.probability >= 0.0);
      CHECK(d.probability <= 1.0);
      const auto d2 = conception_probability(t, parity, since, m, theta, true);
      CHECK(d.probability == d2.probability);
      CHECK(d.state == d2.state);
    }
  }
}
