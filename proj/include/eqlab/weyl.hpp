#pragma once

// Quadratic Weyl sums S_Y(alpha) = sum_{n=1}^{Y} exp(2 pi i n^2 alpha).

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "eqlab/cf.hpp"
#include "eqlab/realnum.hpp"

namespace eqlab {

struct WeylEntry {
  std::uint64_t y = 0;
  double magnitude = 0.0;  // |S_Y|
};

struct WeylSeries {
  std::string alpha_id;
  std::vector<WeylEntry> entries;
  // Bound on the accumulated floating-point error of every |S_Y|.
  double error_bound = 0.0;
};

// Terms are generated by the phase recurrence z_{n+1} = z_n w_n,
// w_{n+1} = w_n exp(4 pi i alpha), re-anchored every few steps from the exact
// phases {n^2 alpha} and {(2n+1) alpha}. Error per term <= 1e-15.
WeylSeries weyl_sum(const Alpha& alpha, std::uint64_t y_max, std::span<const std::uint64_t> checkpoints);

// Same pass, returning |S_Y| for every Y = 1..y_max (index Y-1).
std::vector<double> weyl_magnitudes(const Alpha& alpha, std::uint64_t y_max);

// Plain per-term evaluation from the exact phases, without the recurrence.
double weyl_direct(const Alpha& alpha, std::uint64_t y);

struct BehnkeWitness {
  std::size_t l = 0;  // convergent index, 0 when not tied to a table
  BigInt q;
  std::uint64_t y = 0;
  double magnitude = 0.0;
  double ratio = 0.0;  // magnitude / sqrt(q)
};

// argmax_{1 <= Y < sqrt(q)} |S_Y|, first maximum on ties. q >= 2.
BehnkeWitness behnke_witness(const Alpha& alpha, const BigInt& q);

// Witness for every convergent denominator with 9 <= q_l <= max_q.
std::vector<BehnkeWitness> behnke_search(const Alpha& alpha, const ConvergentTable& table,
                                         const BigInt& max_q = BigInt(1'000'000'000'000));

struct KoksmaResult {
  bool holds = false;
  double margin = 0.0;  // N D_N - |S_N| / 4
};

inline constexpr double kKoksmaSlack = 1e-9;

// N D_N >= |S_N| / 4 - 1e-9, the exponential-sum lower bound on discrepancy.
KoksmaResult koksma_check(std::uint64_t n, double d_n, const WeylSeries& series);

void write_witness_csv(std::ostream& out, std::span<const BehnkeWitness> witnesses);
void write_weyl_csv(std::ostream& out, const WeylSeries& series);

}  // namespace eqlab
