#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "eqlab/errors.hpp"
#include "eqlab/experiments.hpp"
#include "gen.hpp"

using namespace eqlab;

namespace {

DiscrepancySeries synthetic(const std::vector<std::uint64_t>& ns, double (*f)(double)) {
  DiscrepancySeries s;
  for (const auto n : ns) {
    const double nd = f(static_cast<double>(n));
    s.entries.push_back({n, nd / static_cast<double>(n), nd});
  }
  return s;
}

ExperimentPlan small_plan(Family family) {
  ExperimentPlan p;
  switch (family) {
    case Family::polynomial: p.spec = SequenceSpec::polynomial({0, 0, 1}); break;
    case Family::hybrid:
      p.spec = SequenceSpec::hybrid({1, 2}, ScheduleMode::practical, 64, {5, 4}, 3);
      p.checkpoints = "blocks";
      p.envelope_mode = EnvelopeMode::peaks;
      p.n_min = 10;
      break;
    default: p.spec = SequenceSpec::kronecker(); break;
  }
  if (family != Family::hybrid) p.checkpoints = "geo:2^0.5:20000";
  p.alpha_count = 5;
  p.seed = 17;
  p.threads = 2;
  return p;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("geometric grid") {
  const auto g = geometric_grid(std::sqrt(2.0), 100);
  CHECK(g == std::vector<std::uint64_t>{1, 2, 3, 4, 6, 8, 12, 16, 23, 32, 46, 64, 91, 100});
  CHECK(geometric_grid(2.0, 16) == std::vector<std::uint64_t>{1, 2, 4, 8, 16});
  CHECK_THROWS_AS(geometric_grid(1.0, 10), ValidationError);
}

TEST_CASE("checkpoint mini-language") {
  CHECK(parse_checkpoints("geo:2^0.5:100", nullptr) == geometric_grid(std::sqrt(2.0), 100));
  CHECK(parse_checkpoints("geo:2^0.5:1e6", nullptr).back() == 1'000'000);
  CHECK(parse_checkpoints("geo:2^0.5:1e6", nullptr, 5000).back() == 5000);
  CHECK(parse_checkpoints("list:10,100,1000", nullptr) == std::vector<std::uint64_t>{10, 100, 1000});
  CHECK_THROWS_AS(parse_checkpoints("list:10,10", nullptr), ValidationError);
  CHECK_THROWS_AS(parse_checkpoints("list:", nullptr), ValidationError);
  CHECK_THROWS_AS(parse_checkpoints("list:0", nullptr), ValidationError);
  CHECK_THROWS_AS(parse_checkpoints("blocks", nullptr), ValidationError);
  CHECK_THROWS_AS(parse_checkpoints("grid:5", nullptr), ValidationError);

  const auto s = make_schedule_practical({1, 2}, BigInt(64), {5, 4}, 3);
  const auto b = parse_checkpoints("blocks", &s);
  for (const auto& f : s.F()) CHECK(std::binary_search(b.begin(), b.end(), f.convert_to<std::uint64_t>()));
  for (const auto& e : s.E()) CHECK(std::binary_search(b.begin(), b.end(), e.convert_to<std::uint64_t>()));
  CHECK(b.back() == s.coverage());
  CHECK(std::is_sorted(b.begin(), b.end()));
  CHECK(std::adjacent_find(b.begin(), b.end()) == b.end());
}

TEST_CASE("fit on synthetic series") {
  const std::vector<std::uint64_t> ns{1000, 2000, 5000, 10000, 100000};
  const auto f = fit_exponent(synthetic(ns, [](double n) { return std::pow(n, 0.4); }), 1000);
  CHECK(f.slope == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(f.stderr_slope == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(f.points_used == 5);
  const auto c = fit_exponent(synthetic(ns, [](double) { return 7.0; }), 1000);
  CHECK(c.slope == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c.intercept == doctest::Approx(std::log(7.0)));
  CHECK_THROWS_AS(fit_exponent(synthetic(ns, [](double n) { return n; }), 10000), ValidationError);
}

TEST_CASE("property: fit recovers the slope under noise") {
  testgen::SplitMix g(40);
  for (int t = 0; t < 50; ++t) {
    const double slope = g.unit();
    DiscrepancySeries s;
    for (std::uint64_t n = 1000; n <= 10'000'000; n *= 2) {
      const double nd = 3.0 * std::pow(static_cast<double>(n), slope) * (1.0 + 0.01 * (g.unit() - 0.5));
      s.entries.push_back({n, nd / static_cast<double>(n), nd});
    }
    const auto f = fit_exponent(s, 1000);
    CHECK(f.slope == doctest::Approx(slope).epsilon(0.01));
    CHECK(f.stderr_slope >= 0.0);
  }
}

TEST_CASE("envelope peaks") {
  const auto s = make_schedule_practical({1, 2}, BigInt(64), {5, 4}, 3);
  std::vector<std::uint64_t> ends;
  for (const auto& e : s.E()) ends.push_back(e.convert_to<std::uint64_t>());
  const auto exact = synthetic(ends, [](double n) { return std::sqrt(n); });
  const auto env = envelope_peaks(exact, s);
  REQUIRE(env.entries.size() == exact.entries.size());
  for (std::size_t i = 0; i < ends.size(); ++i) {
    CHECK(env.entries[i].n == exact.entries[i].n);
    CHECK(env.entries[i].nd == exact.entries[i].nd);
  }

  // monotone N D_N: the window maximum is the value at the block end
  const auto grid = parse_checkpoints("blocks", &s);
  const auto mono = synthetic(grid, [](double n) { return std::log(n + 1); });
  const auto env2 = envelope_peaks(mono, s);
  REQUIRE(env2.entries.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(env2.entries[i].nd == std::log(static_cast<double>(ends[i]) + 1));

  // a bump inside a window is carried to the block end; a partial window is dropped
  DiscrepancySeries bump;
  bump.entries = {{10, 0.1, 1.0}, {70, 0.5, 35.0}, {80, 0.05, 4.0}, {200, 0.01, 2.0}, {376, 0.01, 3.76}, {400, 0.1, 40}};
  const auto env3 = envelope_peaks(bump, s);
  REQUIRE(env3.entries.size() == 2);
  CHECK(env3.entries[0].n == 80);
  CHECK(env3.entries[0].nd == 35.0);
  CHECK(env3.entries[1].n == 376);
  CHECK(env3.entries[1].nd == 3.76);
}

TEST_CASE("reference bounds") {
  const std::vector<std::uint64_t> ns{16, 1'000'000};
  const auto rows = reference_bounds(ns);
  REQUIRE(rows.size() == 2);
  const double l16 = std::log(16.0);
  CHECK(rows[0].khintchine == doctest::Approx(l16 * std::log(l16)));
  CHECK(rows[1].baker == doctest::Approx(1000.0 * std::pow(std::log(1e6), 1.5)));
  CHECK(rows[1].fjk == doctest::Approx(1000.0 * std::pow(std::log(1e6), 0.375)));
  // log log N = 1 at N = e^e ~ 15.15, where the envelope equals e
  const std::vector<std::uint64_t> around{15, 16};
  const auto ee = reference_bounds(around);
  CHECK(ee[0].khintchine < std::numbers::e);
  CHECK(ee[1].khintchine > std::numbers::e);
  CHECK(ee[0].khintchine == doctest::Approx(std::numbers::e).epsilon(0.02));
  const std::vector<std::uint64_t> low{2};
  CHECK_THROWS_AS(reference_bounds(low), ValidationError);
}

TEST_CASE("median") {
  CHECK(median_of({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median_of({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS_AS(median_of({}), ValidationError);
}

TEST_CASE("plan json") {
  const auto p = plan_from_json(R"({"sequence":{"family":"hybrid","gamma":"3/10","m1":64,"rho":1.25,"blocks":4},
                                    "checkpoints":"blocks","alpha_count":4,"seed":9,"envelope_mode":"peaks"})");
  CHECK(p.spec.family == Family::hybrid);
  CHECK(p.spec.gamma == Rational{3, 10});
  CHECK(p.spec.rho == Rational{5, 4});
  CHECK(p.spec.blocks == 4);
  CHECK(p.alpha_count == 4);
  CHECK(p.envelope_mode == EnvelopeMode::peaks);
  const auto back = plan_from_json(plan_to_json(p));
  CHECK(plan_to_json(back) == plan_to_json(p));

  CHECK_THROWS_AS(plan_from_json(R"({"sequence":{"family":"evil"},"colour":"red"})"), ValidationError);
  CHECK_THROWS_AS(plan_from_json(R"({"sequence":{"family":"evil"},"seed":"x"})"), ValidationError);
  CHECK_THROWS_AS(plan_from_json("{"), ValidationError);
  CHECK_THROWS_AS(plan_from_json(R"({"sequence":{"family":"cubic"}})"), ValidationError);
}

TEST_CASE("plan validation precedes work") {
  auto p = small_plan(Family::kronecker);
  p.envelope_mode = EnvelopeMode::peaks;
  CHECK_THROWS_AS(run_experiment(p), ValidationError);
  p = small_plan(Family::kronecker);
  p.precision_bits = 32;
  CHECK_THROWS_AS(run_experiment(p), ValidationError);
  // 2^200 needs more than 192 + ... bits
  p = small_plan(Family::kronecker);
  p.spec = SequenceSpec::lacunary({2, 1});
  p.checkpoints = "list:10,300";
  try {
    run_experiment(p);
    FAIL("expected a precision error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("precision") != std::string::npos);
  }
}

TEST_CASE("square plan: median bracket, Koksma, determinism") {
  const auto p = small_plan(Family::polynomial);
  const auto r = run_experiment(p);
  REQUIRE(r.runs.size() == 5);
  CHECK(r.median.entries.size() == r.checkpoints.size());
  for (std::size_t i = 0; i < r.median.entries.size(); ++i) {
    double lo = 1e300, hi = -1e300;
    for (const auto& run : r.runs) {
      lo = std::min(lo, run.series.entries[i].nd);
      hi = std::max(hi, run.series.entries[i].nd);
    }
    CHECK(r.median.entries[i].nd >= lo);
    CHECK(r.median.entries[i].nd <= hi);
  }
  for (const auto& run : r.runs) {
    REQUIRE(run.koksma);
    CHECK(run.koksma->violations == 0);
    CHECK(run.koksma->checked == r.checkpoints.size());
    CHECK(run.seed == (p.seed ^ run.index));
  }
  CHECK(r.fit.slope > 0.3);
  auto q = p;
  q.threads = 1;
  CHECK(report_to_json(run_experiment(q)) == report_to_json(r));
}

TEST_CASE("hybrid plan: peaks and report files") {
  const auto p = small_plan(Family::hybrid);
  const auto r = run_experiment(p);
  REQUIRE(r.schedule);
  CHECK(r.envelope.entries.size() == 3);
  REQUIRE(r.expected_slope);
  CHECK(*r.expected_slope == 0.5);
  std::size_t witnesses = 0;
  for (const auto& run : r.runs) {
    witnesses += run.witness_checkpoints.size();
    for (const auto n : run.witness_checkpoints) {
      const auto it = std::find_if(run.series.entries.begin(), run.series.entries.end(),
                                   [n](const SeriesEntry& e) { return e.n == n; });
      CHECK(it != run.series.entries.end());
    }
  }
  CHECK(witnesses > 0);

  const auto dir = std::filesystem::temp_directory_path() / "eqlab_test_report";
  std::filesystem::remove_all(dir);
  write_report(r, dir);
  std::ifstream in(dir / "report.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j["generator"] == std::string(kGeneratorId));
  CHECK(j["alphas"].size() == 5);
  for (const auto& a : j["alphas"]) CHECK(std::filesystem::exists(dir / a["series_file"].get<std::string>()));
  CHECK(j["fit"].contains("slope"));
  CHECK(j["fit"].contains("stderr"));
  CHECK(j["reference_bounds"].size() > 0);
  std::filesystem::remove_all(dir);
}

}
