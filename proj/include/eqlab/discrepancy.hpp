#pragma once

// Discrepancy of finite point sets in [0, 1).
//
//   extreme  D_N  = sup_{0 <= a < b <= 1} | #{x_n in [a, b)} / N - (b - a) |
//   star     D*_N = same supremum restricted to a = 0
//
// With x_(1) <= ... <= x_(N) sorted, both have closed forms:
//   D*_N = max_i max(i/N - x_(i), x_(i) - (i-1)/N)
//   D_N  = 1/N + max_i (x_(i) - i/N) - min_i (x_(i) - i/N)

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

namespace eqlab {

class PointSet {
 public:
  PointSet() = default;
  // Throws ValidationError for values outside [0, 1).
  explicit PointSet(std::vector<double> points, bool sorted = false);

  std::span<const double> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool sorted() const noexcept { return sorted_; }
  // Stable, so duplicates keep their order.
  void sort();

 private:
  std::vector<double> points_;
  bool sorted_ = false;
};

enum class DiscrepancyKind { star, extreme };

double star_discrepancy(const PointSet& ps);
double extreme_discrepancy(const PointSet& ps);

// Closed forms on an already sorted range; no validation beyond non-emptiness.
double star_discrepancy_sorted(std::span<const double> sorted);
double extreme_discrepancy_sorted(std::span<const double> sorted);

inline constexpr std::size_t kBruteForceLimit = 4096;

// Independent oracle: enumerates every interval whose endpoints are critical
// values {0, 1, x_k}, with each endpoint either including or excluding the
// points sitting on it (the one-sided limits of half-open intervals).
// O(N^2 log N); N <= kBruteForceLimit.
double brute_force_discrepancy(const PointSet& ps, DiscrepancyKind kind);

struct SeriesEntry {
  std::uint64_t n = 0;
  double d = 0.0;   // D_N
  double nd = 0.0;  // N * D_N
};

struct DiscrepancySeries {
  std::vector<SeriesEntry> entries;
};

// Fills the span with the next points and returns how many were written; a
// short count means the source is exhausted.
using PointSource = std::function<std::size_t(std::span<double>)>;

// Extreme discrepancy of the first N points at every checkpoint N. The prefix
// is kept sorted and each checkpoint is recomputed from scratch.
DiscrepancySeries prefix_series(const PointSource& source, std::span<const std::uint64_t> checkpoints);

// Header `N,D_N,ND_N`; reals with 17 significant digits.
void write_series_csv(std::ostream& out, const DiscrepancySeries& series);
std::string format_real(double x);

}  // namespace eqlab
