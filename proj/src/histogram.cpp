#include "cohortsbi/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cohortsbi/errors.hpp"

namespace cohortsbi {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double largest_finite_edge(const std::vector<double>& edges) {
  for (auto it = edges.rbegin(); it != edges.rend(); ++it)
    if (std::isfinite(*it)) return *it;
  throw ContractError("histogram: no finite edge");
}
}  // namespace

void Histogram::validate() const {
  if (edges.size() != masses.size() + 1)
    throw ContractError("histogram: edges must have one more entry than masses");
  if (masses.empty()) throw ContractError("histogram: no bins");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i] < edges[i + 1]))
      throw ContractError("histogram: edges must be strictly increasing");
    if (!std::isfinite(edges[i]))
      throw ContractError("histogram: only the last edge may be infinite");
  }
  for (double m : masses)
    if (!(m >= 0.0)) throw ContractError("histogram: negative mass");
}

Histogram make_integer_histogram(std::span<const int> values) {
  Histogram h;
  if (values.empty()) {
    h.edges = {0.0, 1.0};
    h.masses = {0.0};
    return h;
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const int lo = *lo_it, hi = *hi_it;
  const int bins = hi - lo + 1;
  h.edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i) h.edges[i] = static_cast<double>(lo + i);
  std::vector<std::uint64_t> counts(bins, 0);
  for (int v : values) ++counts[v - lo];
  h.masses.resize(bins);
  for (int i = 0; i < bins; ++i)
    h.masses[i] = static_cast<double>(counts[i]) / static_cast<double>(values.size());
  h.count = values.size();
  return h;
}

Histogram make_binned_histogram(std::span<const double> values,
                                std::vector<double> edges) {
  Histogram h;
  h.edges = std::move(edges);
  h.masses.assign(h.edges.size() - 1, 0.0);
  h.validate();
  std::uint64_t binned = 0;
  for (double v : values) {
    auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
    if (it == h.edges.begin() || it == h.edges.end()) continue;  // outside grid
    h.masses[static_cast<std::size_t>(it - h.edges.begin()) - 1] += 1.0;
    ++binned;
  }
  if (binned > 0)
    for (double& m : h.masses) m /= static_cast<double>(binned);
  h.count = binned;
  return h;
}

Histogram rebin(const Histogram& src, const std::vector<double>& dst_edges) {
  src.validate();
  Histogram dst;
  dst.edges = dst_edges;
  dst.masses.assign(dst_edges.size() - 1, 0.0);
  dst.validate();
  dst.count = src.count;
  if (src.count == 0) return dst;

  // Common finite stand-in for +inf so inf-vs-inf overlap is well defined.
  double sentinel =
      std::max(largest_finite_edge(src.edges), largest_finite_edge(dst.edges)) + 1.0;
  auto capped = [&](double e) { return std::isfinite(e) ? e : sentinel; };

  for (std::size_t i = 0; i < src.masses.size(); ++i) {
    if (src.masses[i] <= 0.0) continue;
    const double a = capped(src.edges[i]);
    const double b = capped(src.edges[i + 1]);
    for (std::size_t j = 0; j < dst.masses.size(); ++j) {
      const double c = capped(dst.edges[j]);
      const double d = capped(dst.edges[j + 1]);
      const double overlap = std::min(b, d) - std::max(a, c);
      if (overlap > 0.0) dst.masses[j] += src.masses[i] * overlap / (b - a);
    }
  }
  double total = 0.0;
  for (double m : dst.masses) total += m;
  if (total > 0.0)
    for (double& m : dst.masses) m /= total;
  else
    dst.count = 0;  // all mass fell outside the destination grid
  return dst;
}

}  // namespace cohortsbi
