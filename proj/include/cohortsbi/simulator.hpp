#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cohortsbi/histogram.hpp"
#include "cohortsbi/model.hpp"

namespace cohortsbi {

// Reproductive window: ages 10 (inclusive) to 50 (exclusive), in months.
inline constexpr int kWindowStartMonth = 120;
inline constexpr int kWindowEndMonth = 600;
inline constexpr int kNumAges = 40;  // single-year ages 10..49
inline constexpr int kGestationMonths = 9;
inline constexpr int kAmenorrheaMonths = 3;

// Mutable per-woman state of the monthly state machine.
struct WomanState {
  int parity = 0;
  std::optional<int> susceptible_until;  // first month susceptible again
  std::optional<int> last_birth_month;
  // (conception month, planned) while a pregnancy is under way
  std::optional<std::pair<int, bool>> conception_pending;
};

struct BirthRecord {
  std::uint32_t woman_id;
  int mother_age_months;  // equals conception_month + 9
  int conception_month;
  bool planned;  // conception occurred in the trying state
};

// Full synthetic life histories for one cohort. Births are ordered by woman
// id, then chronologically. Births conceived near the end of the window may
// fall at age 50; they are kept here but excluded from the 10..49 rate grid.
struct CohortResult {
  std::vector<BirthRecord> births;
  std::vector<WomanTraits> traits;
  std::uint32_t n_women = 0;
};

// Simulates n_women independent life courses in monthly steps over the
// reproductive window. Deterministic for fixed (theta, n_women, seed) at any
// worker count: woman i draws from a stream seeded by hash(seed, i).
CohortResult simulate_cohort(const ParameterVector& theta, std::uint32_t n_women,
                             std::uint64_t seed);

// Births at each single-year age divided by person-years of exposure. With
// no mortality or censoring every woman contributes one person-year per age,
// so the denominator is n_women throughout.
std::array<double, kNumAges> compute_asfr(const CohortResult& result);

// Same rate restricted to unplanned births.
std::array<double, kNumAges> compute_asufr(const CohortResult& result);

enum class SummaryLayout { kAsfrOnly, kAsfrAndAsufr };

std::string_view to_string(SummaryLayout layout);
SummaryLayout summary_layout_from_string(std::string_view s);
SummaryLayout layout_for_scenario(int scenario);

// Conditioning vector fed to the estimator: ASFR over ages 10..49, optionally
// followed by ASUFR over the same ages.
struct SummaryVector {
  SummaryLayout layout = SummaryLayout::kAsfrOnly;
  std::vector<double> values;  // 40 or 80

  std::size_t expected_size() const {
    return layout == SummaryLayout::kAsfrOnly ? kNumAges : 2 * kNumAges;
  }
};

SummaryVector summarize(const CohortResult& result, SummaryLayout layout);

// Micro-level outcome distributions extracted from the life histories.
struct MicroDistributions {
  Histogram age_first_sex;         // integer years at sexual initiation
  Histogram desired_family_size;   // integer desired parity
  Histogram birth_intervals;       // months between consecutive births,
                                   // 6-month bins on [12, 120) plus overflow
};

MicroDistributions extract_micro_distributions(const CohortResult& result);

// Bin grid used for the birth-interval histogram.
std::vector<double> birth_interval_bin_edges();

}  // namespace cohortsbi
