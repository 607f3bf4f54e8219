#include "eqlab/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "eqlab/discrepancy.hpp"
#include "eqlab/errors.hpp"

namespace eqlab {

namespace {

constexpr std::uint64_t kAnchorEvery = 4;
constexpr double kPerTermError = 1e-15;

struct Cplx {
  double re = 0.0;
  double im = 0.0;
};

inline Cplx mul(Cplx a, Cplx b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }

inline Cplx cis(std::uint64_t fixed) {
  const double angle = 2.0 * std::numbers::pi * std::ldexp(static_cast<double>(fixed), -64);
  return {std::cos(angle), std::sin(angle)};
}

// Calls visit(n, S_n) for n = 1..y_max.
template <typename Visit>
void scan_partial_sums(const Alpha& alpha, std::uint64_t y_max, Visit visit) {
  ExactPhase square(alpha, std::uint64_t{1});  // {n^2 alpha}
  ExactPhase step(alpha, std::uint64_t{3});    // {(2n+1) alpha}
  const ExactPhase step2(alpha, std::uint64_t{2});
  const Cplx rot = cis(step2.fixed64());
  Cplx z, w, sum;
  for (std::uint64_t n = 1; n <= y_max; ++n) {
    if ((n - 1) % kAnchorEvery == 0) {
      z = cis(square.fixed64());
      w = cis(step.fixed64());
    }
    sum.re += z.re;
    sum.im += z.im;
    visit(n, sum);
    z = mul(z, w);
    w = mul(w, rot);
    square += step;
    step += step2;
  }
}

}  // namespace

WeylSeries weyl_sum(const Alpha& alpha, std::uint64_t y_max, std::span<const std::uint64_t> checkpoints) {
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 1 || checkpoints[i] > y_max)
      throw ValidationError("weyl checkpoints must lie in [1, Y]");
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1])
      throw ValidationError("weyl checkpoints must be strictly increasing");
  }
  WeylSeries series;
  series.alpha_id = alpha.to_string();
  series.error_bound = static_cast<double>(y_max) * kPerTermError;
  series.entries.reserve(checkpoints.size());
  std::size_t next = 0;
  scan_partial_sums(alpha, y_max, [&](std::uint64_t n, Cplx s) {
    if (next < checkpoints.size() && checkpoints[next] == n) {
      series.entries.push_back({n, std::hypot(s.re, s.im)});
      ++next;
    }
  });
  return series;
}

std::vector<double> weyl_magnitudes(const Alpha& alpha, std::uint64_t y_max) {
  std::vector<double> out;
  out.reserve(y_max);
  scan_partial_sums(alpha, y_max, [&](std::uint64_t, Cplx s) { out.push_back(std::hypot(s.re, s.im)); });
  return out;
}

double weyl_direct(const Alpha& alpha, std::uint64_t y) {
  double re = 0.0, im = 0.0;
  for (std::uint64_t n = 1; n <= y; ++n) {
    const auto z = cis(ExactPhase(alpha, BigInt(n) * n).fixed64());
    re += z.re;
    im += z.im;
  }
  return std::hypot(re, im);
}

namespace {

std::uint64_t witness_range(const BigInt& q) {
  // largest Y with Y^2 < q
  return boost::multiprecision::sqrt(BigInt(q - 1)).convert_to<std::uint64_t>();
}

BehnkeWitness pick_witness(const std::vector<double>& mags, std::uint64_t y_range, const BigInt& q) {
  BehnkeWitness w;
  w.q = q;
  for (std::uint64_t y = 1; y <= y_range; ++y) {
    if (mags[y - 1] > w.magnitude) {
      w.magnitude = mags[y - 1];
      w.y = y;
    }
  }
  w.ratio = w.magnitude / std::sqrt(q.convert_to<double>());
  return w;
}

}  // namespace

BehnkeWitness behnke_witness(const Alpha& alpha, const BigInt& q) {
  if (q < 2) throw ValidationError("behnke witness needs q >= 2");
  const std::uint64_t range = witness_range(q);
  return pick_witness(weyl_magnitudes(alpha, range), range, q);
}

std::vector<BehnkeWitness> behnke_search(const Alpha& alpha, const ConvergentTable& table, const BigInt& max_q) {
  std::vector<std::size_t> picked;
  std::uint64_t longest = 0;
  for (std::size_t i = 0; i < table.q.size(); ++i) {
    if (table.q[i] < 9 || table.q[i] > max_q) continue;
    picked.push_back(i);
    longest = std::max(longest, witness_range(table.q[i]));
  }
  std::vector<BehnkeWitness> out;
  if (picked.empty()) return out;
  const auto mags = weyl_magnitudes(alpha, longest);
  for (const std::size_t i : picked) {
    auto w = pick_witness(mags, witness_range(table.q[i]), table.q[i]);
    w.l = i + 1;
    out.push_back(std::move(w));
  }
  return out;
}

KoksmaResult koksma_check(std::uint64_t n, double d_n, const WeylSeries& series) {
  const auto it = std::find_if(series.entries.begin(), series.entries.end(),
                               [n](const WeylEntry& e) { return e.y == n; });
  if (it == series.entries.end())
    throw ValidationError("weyl series has no checkpoint N=" + std::to_string(n));
  const double margin = static_cast<double>(n) * d_n - it->magnitude / 4.0;
  return {margin >= -kKoksmaSlack, margin};
}

void write_witness_csv(std::ostream& out, std::span<const BehnkeWitness> witnesses) {
  out << "l,q_l,Y_l,magnitude,ratio\n";
  for (const auto& w : witnesses)
    out << w.l << ',' << w.q.str() << ',' << w.y << ',' << format_real(w.magnitude) << ','
        << format_real(w.ratio) << '\n';
}

void write_weyl_csv(std::ostream& out, const WeylSeries& series) {
  out << "# alpha=" << series.alpha_id << "\n# error_bound=" << format_real(series.error_bound) << '\n';
  out << "Y,abs_S\n";
  for (const auto& e : series.entries) out << e.y << ',' << format_real(e.magnitude) << '\n';
}

}  // namespace eqlab
