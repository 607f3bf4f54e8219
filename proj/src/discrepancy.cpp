#include "eqlab/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "eqlab/errors.hpp"

namespace eqlab {

PointSet::PointSet(std::vector<double> points, bool sorted) : points_(std::move(points)), sorted_(sorted) {
  for (double x : points_)
    if (!(x >= 0.0 && x < 1.0)) throw ValidationError("point outside [0, 1)");
  if (sorted_ && !std::is_sorted(points_.begin(), points_.end()))
    throw ValidationError("point set flagged sorted but is not");
}

void PointSet::sort() {
  if (!sorted_) std::stable_sort(points_.begin(), points_.end());
  sorted_ = true;
}

namespace {

std::vector<double> sorted_copy(const PointSet& ps) {
  if (ps.size() == 0) throw ValidationError("discrepancy of an empty point set");
  std::vector<double> xs(ps.points().begin(), ps.points().end());
  if (!ps.sorted()) std::stable_sort(xs.begin(), xs.end());
  return xs;
}

}  // namespace

double star_discrepancy_sorted(std::span<const double> xs) {
  if (xs.empty()) throw ValidationError("discrepancy of an empty point set");
  const double n = static_cast<double>(xs.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double above = static_cast<double>(i + 1) / n - xs[i];
    const double below = xs[i] - static_cast<double>(i) / n;
    worst = std::max({worst, above, below});
  }
  return worst;
}

double extreme_discrepancy_sorted(std::span<const double> xs) {
  if (xs.empty()) throw ValidationError("discrepancy of an empty point set");
  const double n = static_cast<double>(xs.size());
  double hi = -2.0;
  double lo = 2.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double t = xs[i] - static_cast<double>(i + 1) / n;
    hi = std::max(hi, t);
    lo = std::min(lo, t);
  }
  return 1.0 / n + hi - lo;
}

double star_discrepancy(const PointSet& ps) {
  if (ps.sorted()) return star_discrepancy_sorted(ps.points());
  return star_discrepancy_sorted(sorted_copy(ps));
}

double extreme_discrepancy(const PointSet& ps) {
  if (ps.sorted()) return extreme_discrepancy_sorted(ps.points());
  return extreme_discrepancy_sorted(sorted_copy(ps));
}

double brute_force_discrepancy(const PointSet& ps, DiscrepancyKind kind) {
  if (ps.size() > kBruteForceLimit)
    throw ValidationError("brute force discrepancy limited to N <= " + std::to_string(kBruteForceLimit));
  const auto xs = sorted_copy(ps);
  const double n = static_cast<double>(xs.size());

  std::vector<double> crit(xs);
  crit.push_back(0.0);
  crit.push_back(1.0);
  std::sort(crit.begin(), crit.end());
  crit.erase(std::unique(crit.begin(), crit.end()), crit.end());

  // below[c] = #{x < c}, upto[c] = #{x <= c}
  std::vector<double> below(crit.size()), upto(crit.size());
  for (std::size_t c = 0; c < crit.size(); ++c) {
    below[c] = static_cast<double>(std::lower_bound(xs.begin(), xs.end(), crit[c]) - xs.begin());
    upto[c] = static_cast<double>(std::upper_bound(xs.begin(), xs.end(), crit[c]) - xs.begin());
  }
  auto deviation = [n](double count, double length) { return std::abs(count / n - length); };

  double worst = 0.0;
  if (kind == DiscrepancyKind::star) {
    // [0, v) and the limit [0, v]
    for (std::size_t v = 0; v < crit.size(); ++v) {
      worst = std::max(worst, deviation(below[v], crit[v]));
      worst = std::max(worst, deviation(upto[v], crit[v]));
    }
    return worst;
  }
  for (std::size_t u = 0; u < crit.size(); ++u) {
    // degenerate [u, u]: the points sitting exactly on u
    worst = std::max(worst, deviation(upto[u] - below[u], 0.0));
    for (std::size_t v = u + 1; v < crit.size(); ++v) {
      const double len = crit[v] - crit[u];
      worst = std::max(worst, deviation(below[v] - below[u], len));  // [u, v)
      worst = std::max(worst, deviation(upto[v] - below[u], len));   // [u, v]
      worst = std::max(worst, deviation(below[v] - upto[u], len));   // (u, v)
      worst = std::max(worst, deviation(upto[v] - upto[u], len));    // (u, v]
    }
  }
  return worst;
}

DiscrepancySeries prefix_series(const PointSource& source, std::span<const std::uint64_t> checkpoints) {
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 1) throw ValidationError("checkpoints must be >= 1");
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1])
      throw ValidationError("checkpoints must be strictly increasing");
  }
  DiscrepancySeries series;
  series.entries.reserve(checkpoints.size());
  std::vector<double> prefix;
  if (!checkpoints.empty()) prefix.reserve(checkpoints.back());
  for (const std::uint64_t n : checkpoints) {
    const std::size_t have = prefix.size();
    prefix.resize(n);
    const std::span<double> tail(prefix.data() + have, n - have);
    const std::size_t got = source(tail);
    if (got < tail.size())
      throw RangeError("point stream exhausted before checkpoint N=" + std::to_string(n) + " (" +
                       std::to_string(have + got) + " points available)");
    std::sort(prefix.begin() + static_cast<std::ptrdiff_t>(have), prefix.end());
    std::inplace_merge(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(have), prefix.end());
    const double d = extreme_discrepancy_sorted(prefix);
    series.entries.push_back({n, d, static_cast<double>(n) * d});
  }
  return series;
}

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_series_csv(std::ostream& out, const DiscrepancySeries& series) {
  out << "N,D_N,ND_N\n";
  for (const auto& e : series.entries) out << e.n << ',' << format_real(e.d) << ',' << format_real(e.nd) << '\n';
}

}  // namespace eqlab
