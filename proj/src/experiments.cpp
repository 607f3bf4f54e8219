#include "eqlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "eqlab/cf.hpp"
#include "eqlab/errors.hpp"

namespace eqlab {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Checkpoints

std::vector<std::uint64_t> geometric_grid(double ratio, std::uint64_t max_n) {
  if (!(ratio > 1.0)) throw ValidationError("geometric ratio must exceed 1");
  if (max_n < 1) throw ValidationError("grid maximum must be >= 1");
  std::vector<std::uint64_t> grid;
  for (int k = 0;; ++k) {
    const long double v = std::pow(static_cast<long double>(ratio), static_cast<long double>(k));
    const long double nearest = std::round(v);
    const long double n = std::fabs(v - nearest) <= 1e-9L * v ? nearest : std::ceil(v);
    if (n > static_cast<long double>(max_n)) break;
    const auto value = static_cast<std::uint64_t>(n);
    if (grid.empty() || grid.back() < value) grid.push_back(value);
  }
  if (grid.back() != max_n) grid.push_back(max_n);
  return grid;
}

namespace {

std::uint64_t parse_count(std::string_view text) {
  // accepts 1000, 1e6, 2.5e5
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !(v >= 1.0) || v > 9.0e18 || v != std::floor(v))
    throw ValidationError("bad checkpoint value '" + s + "'");
  return static_cast<std::uint64_t>(v);
}

std::uint64_t to_u64_checked(const BigInt& x, const char* what) {
  if (x > BigInt(std::numeric_limits<std::uint64_t>::max()))
    throw ValidationError(std::string(what) + " does not fit a 64-bit index");
  return x.convert_to<std::uint64_t>();
}

void merge_points(std::vector<std::uint64_t>& grid, const std::vector<std::uint64_t>& extra) {
  grid.insert(grid.end(), extra.begin(), extra.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
}

}  // namespace

std::vector<std::uint64_t> parse_checkpoints(std::string_view spec, const BlockSchedule* schedule,
                                             std::optional<std::uint64_t> max_n) {
  std::vector<std::uint64_t> grid;
  if (spec.rfind("geo:", 0) == 0) {
    const auto body = spec.substr(4);
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) throw ValidationError("geo checkpoints need 'geo:<ratio>:<max>'");
    const std::string ratio_text(body.substr(0, colon));
    double ratio = 0.0;
    if (const auto caret = ratio_text.find('^'); caret != std::string::npos)
      ratio = std::pow(std::stod(ratio_text.substr(0, caret)), std::stod(ratio_text.substr(caret + 1)));
    else
      ratio = std::stod(ratio_text);
    std::uint64_t top = parse_count(body.substr(colon + 1));
    if (max_n) top = std::min(top, *max_n);
    grid = geometric_grid(ratio, top);
  } else if (spec.rfind("list:", 0) == 0) {
    std::string body(spec.substr(5));
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto v = parse_count(item);
      if (!grid.empty() && v <= grid.back()) throw ValidationError("list checkpoints must be strictly increasing");
      grid.push_back(v);
    }
    if (grid.empty()) throw ValidationError("empty checkpoint list");
    if (max_n && grid.back() > *max_n) throw ValidationError("checkpoint beyond max_n");
  } else if (spec == "blocks") {
    if (!schedule) throw ValidationError("'blocks' checkpoints need a hybrid schedule");
    std::uint64_t top = to_u64_checked(schedule->coverage(), "schedule coverage");
    if (max_n) top = std::min(top, *max_n);
    grid = geometric_grid(std::sqrt(2.0), top);
    std::vector<std::uint64_t> aligned;
    for (const auto& f : schedule->F())
      if (f <= top) aligned.push_back(f.convert_to<std::uint64_t>());
    for (const auto& e : schedule->E())
      if (e <= top) aligned.push_back(e.convert_to<std::uint64_t>());
    merge_points(grid, aligned);
  } else {
    throw ValidationError("unknown checkpoint spec '" + std::string(spec) + "'");
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Fits, envelopes, references

ExponentFit fit_exponent(const DiscrepancySeries& series, std::uint64_t n_min) {
  std::vector<double> xs, ys;
  for (const auto& e : series.entries) {
    if (e.n < n_min || !(e.nd > 0.0)) continue;
    xs.push_back(std::log(static_cast<double>(e.n)));
    ys.push_back(std::log(e.nd));
  }
  if (xs.size() < 3) throw ValidationError("exponent fit needs at least 3 usable checkpoints");
  const double k = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw ValidationError("exponent fit needs distinct checkpoints");
  ExponentFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ssr += r * r;
  }
  fit.stderr_slope = std::sqrt(std::max(0.0, ssr / (k - 2.0) / sxx));
  fit.points_used = xs.size();
  return fit;
}

DiscrepancySeries envelope_peaks(const DiscrepancySeries& series, const BlockSchedule& schedule) {
  DiscrepancySeries out;
  if (series.entries.empty()) return out;
  const std::uint64_t last = series.entries.back().n;
  std::uint64_t window_start = 0;  // exclusive
  std::size_t i = 0;
  for (const auto& block_end : schedule.E()) {
    if (block_end > BigInt(last)) break;
    const auto end = block_end.convert_to<std::uint64_t>();
    bool any = false;
    double peak = 0.0;
    for (; i < series.entries.size() && series.entries[i].n <= end; ++i) {
      if (series.entries[i].n <= window_start) continue;
      peak = any ? std::max(peak, series.entries[i].nd) : series.entries[i].nd;
      any = true;
    }
    if (any) out.entries.push_back({end, peak / static_cast<double>(end), peak});
    window_start = end;
  }
  return out;
}

std::vector<ReferenceRow> reference_bounds(std::span<const std::uint64_t> n_list) {
  std::vector<ReferenceRow> rows;
  rows.reserve(n_list.size());
  for (const auto n : n_list) {
    if (n < 3) throw ValidationError("reference bounds need N >= 3");
    const double x = static_cast<double>(n);
    const double lg = std::log(x);
    rows.push_back({n, std::sqrt(x) * std::pow(lg, 1.5), lg * std::log(lg), std::sqrt(x) * std::pow(lg, 0.375)});
  }
  return rows;
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

// ---------------------------------------------------------------------------
// Point sources

PointSource make_point_source(const SequenceSpec& spec, const BlockSchedule* schedule, const Alpha& alpha) {
  struct State {
    SequenceStream stream;
    Alpha alpha;
    ExactPhase phase;
  };
  auto state = std::make_shared<State>(State{SequenceStream(spec, schedule), alpha, ExactPhase(alpha, std::uint64_t{0})});
  return [state](std::span<double> out) -> std::size_t {
    for (std::size_t i = 0; i < out.size(); ++i) {
      try {
        state->stream.advance();
      } catch (const RangeError&) {
        return i;
      }
      if (state->stream.fits_u64()) {
        state->phase.set_multiple(state->stream.term_u64());
        out[i] = state->phase.unit().value;
      } else {
        out[i] = ExactPhase(state->alpha, state->stream.term()).unit().value;
      }
    }
    return out.size();
  };
}

// ---------------------------------------------------------------------------
// Plans

namespace {

Rational rational_from_json(const json& v) {
  if (v.is_string()) return Rational::parse(v.get<std::string>());
  if (v.is_number_integer()) return Rational::make(v.get<std::int64_t>(), 1);
  if (v.is_number()) return Rational::parse(v.dump());
  throw ValidationError("expected a rational number");
}

std::string to_string(EnvelopeMode mode) { return mode == EnvelopeMode::all ? "all" : "peaks"; }

EnvelopeMode parse_envelope_mode(const std::string& text) {
  if (text == "all") return EnvelopeMode::all;
  if (text == "peaks") return EnvelopeMode::peaks;
  throw ValidationError("unknown envelope mode '" + text + "'");
}

json spec_to_json(const SequenceSpec& spec) {
  json j = json::object();
  for (const auto& [k, v] : spec.describe()) j[k] = v;
  return j;
}

unsigned thread_count(const ExperimentPlan& plan) {
  if (plan.threads > 0) return plan.threads;
  if (const char* env = std::getenv("EQLAB_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

ExperimentPlan plan_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("plan is not valid JSON: ") + ex.what());
  }
  static const std::vector<std::string> known{"sequence", "checkpoints", "alpha_count", "seed",
                                              "precision_bits", "envelope_mode", "n_min", "max_n",
                                              "slope_tolerance", "threads"};
  try {
    for (const auto& [key, _] : j.items())
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw ValidationError("unknown plan key '" + key + "'");
    ExperimentPlan plan;
    const json& s = j.at("sequence");
    SequenceSpec& spec = plan.spec;
    spec.family = parse_family(s.at("family").get<std::string>());
    if (s.contains("coeffs")) {
      if (s["coeffs"].is_string()) {
        std::stringstream ss(s["coeffs"].get<std::string>());
        std::string item;
        while (std::getline(ss, item, ',')) spec.coeffs.push_back(std::stoll(item));
      } else {
        spec.coeffs = s["coeffs"].get<std::vector<std::int64_t>>();
      }
    }
    if (s.contains("ratio")) spec.ratio = rational_from_json(s["ratio"]);
    if (s.contains("gamma")) spec.gamma = rational_from_json(s["gamma"]);
    if (s.contains("mode")) spec.mode = parse_schedule_mode(s["mode"].get<std::string>());
    if (s.contains("m1")) spec.m1 = s["m1"].is_string() ? std::stoull(s["m1"].get<std::string>()) : s["m1"].get<std::uint64_t>();
    if (s.contains("rho")) spec.rho = rational_from_json(s["rho"]);
    if (s.contains("blocks")) spec.blocks = s["blocks"].is_string() ? std::stoi(s["blocks"].get<std::string>()) : s["blocks"].get<int>();
    if (j.contains("checkpoints")) plan.checkpoints = j["checkpoints"].get<std::string>();
    if (j.contains("alpha_count")) plan.alpha_count = j["alpha_count"].get<std::uint64_t>();
    if (j.contains("seed")) plan.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("precision_bits")) plan.precision_bits = j["precision_bits"].get<unsigned>();
    if (j.contains("envelope_mode")) plan.envelope_mode = parse_envelope_mode(j["envelope_mode"].get<std::string>());
    if (j.contains("n_min")) plan.n_min = j["n_min"].get<std::uint64_t>();
    if (j.contains("max_n")) plan.max_n = j["max_n"].get<std::uint64_t>();
    if (j.contains("slope_tolerance")) plan.slope_tolerance = j["slope_tolerance"].get<double>();
    if (j.contains("threads")) plan.threads = j["threads"].get<unsigned>();
    return plan;
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("bad plan field: ") + ex.what());
  } catch (const std::logic_error& ex) {
    // std::stoll and friends
    if (dynamic_cast<const ValidationError*>(&ex)) throw;
    throw ValidationError(std::string("bad plan value: ") + ex.what());
  }
}

std::string plan_to_json(const ExperimentPlan& plan) {
  json j;
  j["sequence"] = spec_to_json(plan.spec);
  j["checkpoints"] = plan.checkpoints;
  j["alpha_count"] = plan.alpha_count;
  j["seed"] = plan.seed;
  j["precision_bits"] = plan.precision_bits;
  j["envelope_mode"] = to_string(plan.envelope_mode);
  j["n_min"] = plan.n_min;
  if (plan.max_n) j["max_n"] = *plan.max_n;
  j["slope_tolerance"] = plan.slope_tolerance;
  return j.dump(2);
}

void validate_plan(const ExperimentPlan& plan) {
  plan.spec.validate();
  if (plan.alpha_count < 1) throw ValidationError("alpha_count must be >= 1");
  if (plan.precision_bits < kMinPrecisionBits) throw ValidationError("invalid precision: P >= 64 required");
  if (plan.envelope_mode == EnvelopeMode::peaks && plan.spec.family != Family::hybrid)
    throw ValidationError("peak envelopes need a hybrid sequence");
  if (plan.checkpoints == "blocks" && plan.spec.family != Family::hybrid)
    throw ValidationError("'blocks' checkpoints need a hybrid sequence");
  if (!(plan.slope_tolerance > 0.0)) throw ValidationError("slope_tolerance must be positive");
}

// ---------------------------------------------------------------------------
// Runner

namespace {

// F_l + Y for each quadratic run with e_l >= 9, where Y is the witness of the
// largest convergent denominator q <= e_l.
std::vector<std::uint64_t> witness_checkpoints(const Alpha& alpha, const BlockSchedule& schedule,
                                               std::uint64_t top) {
  std::vector<std::uint64_t> out;
  BigInt limit = 1;
  limit <<= (alpha.precision_bits() - 64) / 2;
  for (std::size_t l = 0; l < schedule.e().size(); ++l) {
    const BigInt& e = schedule.e()[l];
    if (e < 9 || e > limit || schedule.F()[l] >= BigInt(top)) continue;
    const auto table = cf_expand(alpha, e);
    const BigInt* best = nullptr;
    for (const auto& q : table.q)
      if (q <= e) best = &q;
    if (!best || *best < 9) continue;
    const auto witness = behnke_witness(alpha, *best);
    const BigInt n = schedule.F()[l] + witness.y;
    if (n <= BigInt(top)) out.push_back(n.convert_to<std::uint64_t>());
  }
  return out;
}

AlphaRun run_one(const ExperimentPlan& plan, const BlockSchedule* schedule, unsigned precision,
                 const std::vector<std::uint64_t>& grid, std::uint64_t index) {
  AlphaRun run;
  run.index = index;
  run.seed = plan.seed ^ index;
  const Alpha alpha = sample_alpha(run.seed, precision);
  run.alpha_id = alpha.to_string();
  char name[64];
  std::snprintf(name, sizeof name, "series_alpha_%03llu.csv", static_cast<unsigned long long>(index));
  run.series_file = name;

  std::vector<std::uint64_t> checkpoints = grid;
  if (schedule && plan.checkpoints == "blocks") {
    run.witness_checkpoints = witness_checkpoints(alpha, *schedule, grid.back());
    merge_points(checkpoints, run.witness_checkpoints);
  }
  run.series = prefix_series(make_point_source(plan.spec, schedule, alpha), checkpoints);

  if (plan.spec.is_pure_square()) {
    const auto sums = weyl_sum(alpha, checkpoints.back(), checkpoints);
    KoksmaSummary summary;
    for (const auto& e : run.series.entries) {
      const auto k = koksma_check(e.n, e.d, sums);
      summary.min_margin = summary.checked == 0 ? k.margin : std::min(summary.min_margin, k.margin);
      ++summary.checked;
      if (!k.holds) ++summary.violations;
    }
    run.koksma = summary;
  }
  return run;
}

DiscrepancySeries pointwise_median(const std::vector<AlphaRun>& runs, const std::vector<std::uint64_t>& grid,
                                   bool envelope, const BlockSchedule* schedule) {
  std::vector<DiscrepancySeries> sources;
  for (const auto& r : runs) sources.push_back(envelope ? envelope_peaks(r.series, *schedule) : r.series);
  std::vector<std::uint64_t> ns;
  if (envelope) {
    for (const auto& e : sources.front().entries) ns.push_back(e.n);
  } else {
    ns = grid;
  }
  DiscrepancySeries median;
  for (const auto n : ns) {
    std::vector<double> values;
    for (const auto& s : sources) {
      const auto it = std::lower_bound(s.entries.begin(), s.entries.end(), n,
                                       [](const SeriesEntry& e, std::uint64_t v) { return e.n < v; });
      if (it == s.entries.end() || it->n != n) throw std::logic_error("median: checkpoint missing in a run");
      values.push_back(it->nd);
    }
    const double nd = median_of(values);
    median.entries.push_back({n, nd / static_cast<double>(n), nd});
  }
  return median;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentPlan& plan) {
  validate_plan(plan);
  ExperimentReport report;
  report.plan = plan;
  const BlockSchedule* schedule = nullptr;
  if (plan.spec.family == Family::hybrid) {
    report.schedule = make_schedule(plan.spec);
    schedule = &*report.schedule;
  }
  report.checkpoints = parse_checkpoints(plan.checkpoints, schedule, plan.max_n);
  if (schedule && BigInt(report.checkpoints.back()) > schedule->coverage())
    throw ValidationError("checkpoints extend beyond the hybrid schedule coverage " + schedule->coverage().str());

  const unsigned needed = bit_length(seq_term(plan.spec, schedule, BigInt(report.checkpoints.back()))) + 64;
  if (plan.precision_bits < needed)
    throw ValidationError("invalid precision: P=" + std::to_string(plan.precision_bits) +
                          " < bits(max a_n) + 64 = " + std::to_string(needed));
  report.precision_bits = plan.precision_bits;

  report.runs.resize(plan.alpha_count);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::uint64_t i = next++; i < plan.alpha_count; i = next++) {
      try {
        report.runs[i] = run_one(plan, schedule, report.precision_bits, report.checkpoints, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(thread_count(plan), plan.alpha_count));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  report.median = pointwise_median(report.runs, report.checkpoints, false, schedule);
  if (plan.envelope_mode == EnvelopeMode::peaks) {
    report.envelope = pointwise_median(report.runs, report.checkpoints, true, schedule);
    report.fit = fit_exponent(report.envelope, plan.n_min);
  } else {
    report.fit = fit_exponent(report.median, plan.n_min);
  }
  if (plan.spec.family == Family::hybrid) {
    report.expected_slope = plan.spec.gamma.value();
    report.within_tolerance = std::abs(report.fit.slope - *report.expected_slope) <= plan.slope_tolerance;
  }
  std::vector<std::uint64_t> ref_ns;
  for (const auto n : report.checkpoints)
    if (n >= 3) ref_ns.push_back(n);
  report.references = reference_bounds(ref_ns);
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json series_to_json(const DiscrepancySeries& s) {
  json arr = json::array();
  for (const auto& e : s.entries) arr.push_back({{"N", e.n}, {"D_N", e.d}, {"ND_N", e.nd}});
  return arr;
}

json big_list(const std::vector<BigInt>& v) {
  json arr = json::array();
  for (const auto& x : v) arr.push_back(x.str());
  return arr;
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  json j;
  j["generator"] = std::string(kGeneratorId);
  j["plan"] = json::parse(plan_to_json(report.plan));
  j["precision_bits"] = report.precision_bits;
  if (report.schedule) {
    const auto& s = *report.schedule;
    j["schedule"] = {{"m", big_list(s.m())}, {"e", big_list(s.e())}, {"A", big_list(s.A())},
                     {"B", big_list(s.B())}, {"F", big_list(s.F())}, {"E", big_list(s.E())}};
  }
  j["checkpoints"] = report.checkpoints;
  json runs = json::array();
  for (const auto& r : report.runs) {
    json jr{{"index", r.index}, {"seed", r.seed}, {"alpha", r.alpha_id}, {"series_file", r.series_file}};
    if (!r.witness_checkpoints.empty()) jr["witness_checkpoints"] = r.witness_checkpoints;
    if (r.koksma)
      jr["koksma"] = {{"checked", r.koksma->checked}, {"violations", r.koksma->violations},
                      {"min_margin", r.koksma->min_margin}};
    runs.push_back(std::move(jr));
  }
  j["alphas"] = std::move(runs);
  j["median_series"] = series_to_json(report.median);
  if (report.plan.envelope_mode == EnvelopeMode::peaks) j["envelope"] = series_to_json(report.envelope);
  j["fit"] = {{"on", to_string(report.plan.envelope_mode)},
              {"n_min", report.plan.n_min},
              {"slope", report.fit.slope},
              {"intercept", report.fit.intercept},
              {"stderr", report.fit.stderr_slope},
              {"points_used", report.fit.points_used}};
  if (report.expected_slope) {
    j["fit"]["expected_slope"] = *report.expected_slope;
    j["fit"]["tolerance"] = report.plan.slope_tolerance;
    j["fit"]["within_tolerance"] = *report.within_tolerance;
  }
  json refs = json::array();
  for (const auto& r : report.references)
    refs.push_back({{"N", r.n}, {"baker", r.baker}, {"khintchine", r.khintchine}, {"fjk", r.fjk}});
  j["reference_bounds"] = std::move(refs);
  return j.dump(2) + "\n";
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& r : report.runs) {
    std::ofstream out(dir / r.series_file);
    if (!out) throw std::runtime_error("cannot write " + (dir / r.series_file).string());
    write_series_csv(out, r.series);
  }
  std::ofstream out(dir / "report.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "report.json").string());
  out << report_to_json(report);
}

}  // namespace eqlab
