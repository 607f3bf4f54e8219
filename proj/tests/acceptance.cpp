// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "eqlab/cf.hpp"
#include "eqlab/discrepancy.hpp"
#include "eqlab/experiments.hpp"
#include "eqlab/weyl.hpp"
#include "gen.hpp"

using namespace eqlab;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s criterion %d (%s): %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

ExperimentPlan hybrid_plan(Rational gamma) {
  ExperimentPlan p;
  p.spec = SequenceSpec::hybrid(gamma, ScheduleMode::practical, 64, {5, 4}, 6);
  p.checkpoints = "blocks";
  p.envelope_mode = EnvelopeMode::peaks;
  p.alpha_count = 16;
  p.seed = 1;
  return p;
}

ExperimentPlan plain_plan(SequenceSpec spec, std::uint64_t alphas) {
  ExperimentPlan p;
  p.spec = std::move(spec);
  p.checkpoints = "geo:2^0.5:1e6";
  p.alpha_count = alphas;
  p.seed = 1;
  return p;
}

// min over alpha and convergents q in [1e2, 1e6] of the Behnke ratio
double witness_floor(std::uint64_t seed_base) {
  double floor = 1e300;
  for (std::uint64_t i = 0; i < 16; ++i) {
    const Alpha a = sample_alpha(seed_base ^ i, kDefaultPrecisionBits);
    const auto table = cf_expand(a, BigInt(1'000'000));
    for (const auto& w : behnke_search(a, table, BigInt(1'000'000)))
      if (w.q >= 100) floor = std::min(floor, w.ratio);
  }
  return floor;
}

}  // namespace

int main() {
  report(1, "oracle equivalence", [] {
    testgen::SplitMix g(0xacce55);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const PointSet ps(g.points(g.range(1, 256)));
      worst = std::max(worst, std::fabs(star_discrepancy(ps) - brute_force_discrepancy(ps, DiscrepancyKind::star)));
      worst = std::max(worst,
                       std::fabs(extreme_discrepancy(ps) - brute_force_discrepancy(ps, DiscrepancyKind::extreme)));
    }
    return Outcome{worst <= 1e-12, fmt("1000 sets, max |closed - oracle| = %.3g", worst)};
  });

  report(2, "shift invariance", [] {
    testgen::SplitMix g(0x5171f7);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      auto v = g.points(g.range(1, 4096));
      const double before = extreme_discrepancy(PointSet(v));
      const double beta = g.unit();
      for (auto& x : v) {
        x += beta;
        if (x >= 1.0) x -= 1.0;
      }
      worst = std::max(worst, std::fabs(extreme_discrepancy(PointSet(v)) - before));
    }
    return Outcome{worst <= 1e-12, fmt("100 pairs, max difference %.3g", worst)};
  });

  report(3, "Koksma inequality", [] {
    const auto r = run_experiment(plain_plan(SequenceSpec::polynomial({0, 0, 1}), 10));
    std::size_t checked = 0, violations = 0;
    double margin = 1e300;
    for (const auto& run : r.runs) {
      checked += run.koksma->checked;
      violations += run.koksma->violations;
      margin = std::min(margin, run.koksma->min_margin);
    }
    return Outcome{checked > 0 && violations == 0,
                   fmt("%.0f checks, %.0f violations, min margin %.4g", static_cast<double>(checked),
                       static_cast<double>(violations), margin)};
  });

  report(4, "Behnke witness floor", [] {
    const double r0 = witness_floor(0x9000);
    const double fresh = witness_floor(0xf4e5);
    return Outcome{r0 > 0.0 && fresh >= r0 / 2, fmt("pilot r0 = %.4f, fresh minimum = %.4f (need >= %.4f)", r0,
                                                     fresh, r0 / 2)};
  });

  report(5, "Kronecker regime", [] {
    const Alpha a = golden_alpha(kDefaultPrecisionBits);
    const auto cp = geometric_grid(std::sqrt(2.0), 10'000'000);
    const auto s = prefix_series(make_point_source(SequenceSpec::kronecker(), nullptr, a), cp);
    const auto fit = fit_exponent(s, 1000);
    // N D_N / (log N)^{3/2} over N >= 1e3, split at 1e5
    double head = 0.0, tail = 0.0;
    for (const auto& e : s.entries) {
      if (e.n < 1000) continue;
      const double r = e.nd / std::pow(std::log(static_cast<double>(e.n)), 1.5);
      (e.n < 100000 ? head : tail) = std::max(e.n < 100000 ? head : tail, r);
    }
    const bool bounded = std::max(head, tail) <= 1.0 && tail <= head;
    return Outcome{fit.slope <= 0.05 && bounded,
                   fmt("slope %.4f (need <= 0.05), max N D_N/(log N)^1.5 head %.4f tail %.4f (need <= 1, tail <= head)",
                       fit.slope, head, tail)};
  });

  report(6, "quadratic regime", [] {
    const auto r = run_experiment(plain_plan(SequenceSpec::polynomial({0, 0, 1}), 16));
    return Outcome{r.fit.slope >= 0.40 && r.fit.slope <= 0.55,
                   fmt("median slope %.4f +- %.4f (need [0.40, 0.55])", r.fit.slope, r.fit.stderr_slope)};
  });

  std::string report_half;
  report(7, "hybrid construction", [&] {
    std::string detail;
    bool ok = true;
    for (const Rational gamma : {Rational{3, 10}, Rational{1, 2}}) {
      const auto r = run_experiment(hybrid_plan(gamma));
      if (gamma == Rational{1, 2}) report_half = report_to_json(r);
      const bool in = std::fabs(r.fit.slope - gamma.value()) <= 0.08;
      ok = ok && in;
      detail += fmt("gamma %.2f: peak slope %.4f +- %.4f over %.0f peaks; ", gamma.value(), r.fit.slope,
                    r.fit.stderr_slope, static_cast<double>(r.fit.points_used));
    }
    // strict schedule: run-length rules and bookkeeping identities, 3 blocks
    const auto s = make_schedule_strict({1, 2}, BigInt(100), 3);
    bool strict = s.consistent() && s.quadratic_blocks() == 3;
    for (std::size_t l = 1; l < 3; ++l) {
      const long double lg = std::log(s.m()[l].convert_to<long double>());
      strict = strict && lg * lg >= s.E()[l - 1].convert_to<long double>() * (1 - 1e-15L);
    }
    for (std::size_t l = 0; l < 3; ++l) {
      const long double f = s.F()[l].convert_to<long double>();
      strict = strict && std::fabs(s.e()[l].convert_to<long double>() - f / std::log(f)) <= 1 + f * 1e-15L;
    }
    detail += strict ? "strict schedule arithmetic ok" : "strict schedule arithmetic BROKEN";
    return Outcome{ok && strict, detail};
  });

  report(8, "evil numbers", [] {
    const auto r = run_experiment(plain_plan(SequenceSpec::evil(), 16));
    const double s = r.fit.slope;
    const bool band = s >= 0.34 && s <= 0.46;
    return Outcome{s > 0.05 && s < 0.5,
                   fmt("median slope %.4f +- %.4f; separated from 0.05 and 0.5; advisory band [0.34, 0.46] ",
                       s, r.fit.stderr_slope) +
                       (band ? "met" : "missed")};
  });

  report(9, "performance", [] {
    const Alpha a = sample_alpha(99, kDefaultPrecisionBits);
    const std::vector<std::uint64_t> one{10'000'000};
    auto t0 = Clock::now();
    const auto s = prefix_series(make_point_source(SequenceSpec::kronecker(), nullptr, a), one);
    const double disc = seconds_since(t0);
    t0 = Clock::now();
    const auto w = weyl_sum(a, 10'000'000, one);
    const double weyl = seconds_since(t0);
    return Outcome{disc <= 10.0 && weyl <= 1.0 && !s.entries.empty() && !w.entries.empty(),
                   fmt("discrepancy of 1e7 points %.3fs (<= 10), Weyl sum of 1e7 terms %.3fs (<= 1)", disc, weyl)};
  });

  report(10, "determinism", [&] {
    const auto again = report_to_json(run_experiment(hybrid_plan({1, 2})));
    const bool same = !report_half.empty() && again == report_half;
    return Outcome{same, fmt("report JSON of %.0f bytes ", static_cast<double>(again.size())) +
                             (same ? "identical across runs" : "differs")};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
