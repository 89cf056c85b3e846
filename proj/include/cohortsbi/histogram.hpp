#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cohortsbi {

// Binned distribution over a contiguous grid. `edges` has one more entry
// than `masses` and is strictly increasing; the last edge may be +inf for an
// overflow bin. When count > 0 the masses sum to 1; an all-zero mass vector
// with count == 0 marks "no events observed".
struct Histogram {
  std::vector<double> edges;
  std::vector<double> masses;
  std::uint64_t count = 0;

  bool empty() const { return count == 0; }
  std::size_t bins() const { return masses.size(); }
  void validate() const;  // throws ContractError on malformed layout
};

// Unit-width integer bins spanning [min(values), max(values)].
Histogram make_integer_histogram(std::span<const int> values);

// Counts values into the given bins; values outside [edges.front(),
// edges.back()) are dropped.
Histogram make_binned_histogram(std::span<const double> values,
                                std::vector<double> edges);

// Redistributes src mass onto dst_edges proportionally to interval overlap,
// then renormalizes. Overflow (+inf) bins are treated as extending one unit
// past the largest finite edge of either grid, which keeps the operation an
// identity when the grids coincide.
Histogram rebin(const Histogram& src, const std::vector<double>& dst_edges);

}  // namespace cohortsbi
