#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "eqlab/realnum.hpp"

namespace eqlab {

// Continued fraction alpha = [0; a_1, a_2, ...] with convergents p_l / q_l.
// Entry i of each vector holds index l = i + 1.
struct ConvergentTable {
  std::vector<BigInt> partial_quotients;
  std::vector<BigInt> p;
  std::vector<BigInt> q;
  // The expansion terminated (alpha is the last convergent).
  bool exhausted = false;

  std::size_t size() const noexcept { return q.size(); }
};

// All convergents with q_l <= q_bound, plus the first one beyond it when the
// expansion continues. Exact Euclid on numerator / denominator.
//
// A dyadic alpha stands in for a real number only up to 2^-P, and convergents
// of the two agree only while q_l^2 is well below 2^P; q_bound above
// 2^((P - 64) / 2) is rejected for dyadic input.
ConvergentTable cf_expand(const Alpha& alpha, const BigInt& q_bound);

// Empirical constants for eps = 1/2:
//   c_hat  = max_k a_k / k^(3/2)
//   c1_hat = max_l q_{l+1} / (q_l (log q_l)^(3/2)) over l with q_l >= 3
struct GrowthReport {
  double epsilon = 0.5;
  double c_hat = 0.0;
  std::optional<double> c1_hat;
};

GrowthReport growth_report(const ConvergentTable& table);

// Columns `l,a_l,p_l,q_l`.
void write_table_csv(std::ostream& out, const ConvergentTable& table);

}  // namespace eqlab
