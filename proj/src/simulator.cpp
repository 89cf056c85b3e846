#include "cohortsbi/simulator.hpp"

#include <limits>
#include <string>

#include "cohortsbi/errors.hpp"
#include "cohortsbi/parallel.hpp"

namespace cohortsbi {

namespace {

struct WomanHistory {
  WomanTraits traits;
  std::vector<BirthRecord> births;
};

WomanHistory simulate_woman(const ParameterVector& theta, std::uint32_t woman_id,
                            std::uint64_t seed) {
  Rng rng(derive_seed(seed, woman_id));
  WomanHistory out;
  out.traits = sample_woman(theta, rng);
  WomanState state;

  for (int month = kWindowStartMonth; month < kWindowEndMonth; ++month) {
    if (state.conception_pending &&
        month == state.conception_pending->first + kGestationMonths) {
      out.births.push_back({woman_id, month, state.conception_pending->first,
                            state.conception_pending->second});
      state.parity += 1;
      state.last_birth_month = month;
      state.conception_pending.reset();
    }
    const bool susceptible =
        !state.susceptible_until || month >= *state.susceptible_until;
    if (!susceptible) continue;

    std::optional<int> since_birth;
    if (state.last_birth_month) since_birth = month - *state.last_birth_month;
    const ConceptionDecision d = conception_probability(
        out.traits, state.parity, since_birth, month, theta, true);
    const double u = rng.uniform();  // one variate per susceptible month
    if (u < d.probability) {
      state.conception_pending = {month, d.state == IntentState::kTrying};
      // 9 months of gestation plus 3 of amenorrhea before the next chance
      state.susceptible_until = month + kGestationMonths + kAmenorrheaMonths;
    }
  }
  // A conception in the last months of the window delivers past it; the
  // birth is still part of the history (counted in parity, not in the rates).
  if (state.conception_pending) {
    out.births.push_back({woman_id,
                          state.conception_pending->first + kGestationMonths,
                          state.conception_pending->first,
                          state.conception_pending->second});
  }
  return out;
}

std::array<double, kNumAges> rates_from_counts(
    const std::array<std::uint64_t, kNumAges>& counts, std::uint32_t n_women) {
  std::array<double, kNumAges> rates{};
  for (int a = 0; a < kNumAges; ++a)
    rates[a] = static_cast<double>(counts[a]) / static_cast<double>(n_women);
  return rates;
}

}  // namespace

CohortResult simulate_cohort(const ParameterVector& theta, std::uint32_t n_women,
                             std::uint64_t seed) {
  if (n_women == 0)
    throw std::domain_error("simulate_cohort: n_women must be at least 1");
  theta.validate();

  std::vector<WomanHistory> histories(n_women);
  parallel_for(n_women, [&](std::size_t i) {
    histories[i] = simulate_woman(theta, static_cast<std::uint32_t>(i), seed);
  });

  CohortResult result;
  result.n_women = n_women;
  result.traits.reserve(n_women);
  std::size_t total_births = 0;
  for (const auto& h : histories) total_births += h.births.size();
  result.births.reserve(total_births);
  for (auto& h : histories) {
    result.traits.push_back(h.traits);
    result.births.insert(result.births.end(), h.births.begin(), h.births.end());
  }
  return result;
}

std::array<double, kNumAges> compute_asfr(const CohortResult& result) {
  std::array<std::uint64_t, kNumAges> counts{};
  for (const auto& b : result.births) {
    const int age = b.mother_age_months / 12;
    if (age >= 10 && age < 50) ++counts[age - 10];
  }
  return rates_from_counts(counts, result.n_women);
}

std::array<double, kNumAges> compute_asufr(const CohortResult& result) {
  std::array<std::uint64_t, kNumAges> counts{};
  for (const auto& b : result.births) {
    if (b.planned) continue;
    const int age = b.mother_age_months / 12;
    if (age >= 10 && age < 50) ++counts[age - 10];
  }
  return rates_from_counts(counts, result.n_women);
}

std::string_view to_string(SummaryLayout layout) {
  return layout == SummaryLayout::kAsfrOnly ? "asfr" : "asfr+asufr";
}

SummaryLayout summary_layout_from_string(std::string_view s) {
  if (s == "asfr") return SummaryLayout::kAsfrOnly;
  if (s == "asfr+asufr") return SummaryLayout::kAsfrAndAsufr;
  throw ConfigError("unknown summary layout: " + std::string(s));
}

SummaryLayout layout_for_scenario(int scenario) {
  if (scenario == 1 || scenario == 2) return SummaryLayout::kAsfrOnly;
  if (scenario == 3) return SummaryLayout::kAsfrAndAsufr;
  throw ConfigError("scenario must be 1, 2 or 3");
}

SummaryVector summarize(const CohortResult& result, SummaryLayout layout) {
  SummaryVector s;
  s.layout = layout;
  const auto asfr = compute_asfr(result);
  s.values.assign(asfr.begin(), asfr.end());
  if (layout == SummaryLayout::kAsfrAndAsufr) {
    const auto asufr = compute_asufr(result);
    s.values.insert(s.values.end(), asufr.begin(), asufr.end());
  }
  return s;
}

std::vector<double> birth_interval_bin_edges() {
  std::vector<double> edges;
  for (int e = 12; e <= 120; e += 6) edges.push_back(static_cast<double>(e));
  edges.push_back(std::numeric_limits<double>::infinity());
  return edges;
}

MicroDistributions extract_micro_distributions(const CohortResult& result) {
  std::vector<int> first_sex_years;
  std::vector<int> desired;
  first_sex_years.reserve(result.traits.size());
  desired.reserve(result.traits.size());
  for (const auto& t : result.traits) {
    first_sex_years.push_back(static_cast<int>(t.x_i / 12.0));
    desired.push_back(t.d_i);
  }

  std::vector<double> gaps;
  for (std::size_t i = 1; i < result.births.size(); ++i) {
    if (result.births[i].woman_id != result.births[i - 1].woman_id) continue;
    gaps.push_back(static_cast<double>(result.births[i].mother_age_months -
                                       result.births[i - 1].mother_age_months));
  }

  MicroDistributions micro;
  micro.age_first_sex = make_integer_histogram(first_sex_years);
  micro.desired_family_size = make_integer_histogram(desired);
  micro.birth_intervals = make_binned_histogram(gaps, birth_interval_bin_edges());
  return micro;
}

}  // namespace cohortsbi
