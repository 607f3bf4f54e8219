#pragma once

// Monte-Carlo experiments over sampled alpha: prefix discrepancy series of
// ({a_n alpha}), their pointwise median, peak envelopes for hybrid sequences
// and log-log growth exponent fits.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eqlab/discrepancy.hpp"
#include "eqlab/realnum.hpp"
#include "eqlab/sequences.hpp"
#include "eqlab/weyl.hpp"

namespace eqlab {

enum class EnvelopeMode { all, peaks };

// Checkpoint mini-language:
//   geo:<base>^<exp>:<max>   ceil(r^k), k = 0, 1, ..., up to max (max appended)
//   list:<n1>,<n2>,...
//   blocks                   geo:2^0.5 up to the schedule coverage plus F_l, E_l
std::vector<std::uint64_t> geometric_grid(double ratio, std::uint64_t max_n);
std::vector<std::uint64_t> parse_checkpoints(std::string_view spec, const BlockSchedule* schedule,
                                             std::optional<std::uint64_t> max_n = std::nullopt);

struct ExperimentPlan {
  SequenceSpec spec;
  std::string checkpoints = "geo:2^0.5:1e6";
  std::uint64_t alpha_count = 16;
  std::uint64_t seed = 1;
  unsigned precision_bits = kDefaultPrecisionBits;
  EnvelopeMode envelope_mode = EnvelopeMode::all;
  std::uint64_t n_min = 1000;
  // Optional cap on the largest checkpoint.
  std::optional<std::uint64_t> max_n;
  // Band around the expected slope used for the pass flag of hybrid plans.
  double slope_tolerance = 0.08;
  // Worker threads; 0 means EQLAB_THREADS or the hardware concurrency.
  unsigned threads = 0;
};

ExperimentPlan plan_from_json(const std::string& text);
std::string plan_to_json(const ExperimentPlan& plan);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  std::size_t points_used = 0;
};

// Least squares of log(N D_N) on log N over entries with N >= n_min and
// N D_N > 0. Needs at least three such entries.
ExponentFit fit_exponent(const DiscrepancySeries& series, std::uint64_t n_min);

// One entry per completed window (E_{l-1}, E_l]: placed at N = E_l and
// carrying the largest N D_N observed in the window.
DiscrepancySeries envelope_peaks(const DiscrepancySeries& series, const BlockSchedule& schedule);

// Unit-constant comparison envelopes:
//   baker      N^(1/2) (log N)^(3/2)
//   khintchine log N  log log N
//   fjk        N^(1/2) (log N)^(3/8)
struct ReferenceRow {
  std::uint64_t n = 0;
  double baker = 0.0;
  double khintchine = 0.0;
  double fjk = 0.0;
};
std::vector<ReferenceRow> reference_bounds(std::span<const std::uint64_t> n_list);

struct KoksmaSummary {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double min_margin = 0.0;
};

struct AlphaRun {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  std::string alpha_id;
  std::string series_file;
  DiscrepancySeries series;
  std::vector<std::uint64_t> witness_checkpoints;
  std::optional<KoksmaSummary> koksma;
};

struct ExperimentReport {
  ExperimentPlan plan;
  unsigned precision_bits = 0;
  std::optional<BlockSchedule> schedule;
  std::vector<std::uint64_t> checkpoints;
  std::vector<AlphaRun> runs;
  DiscrepancySeries median;
  DiscrepancySeries envelope;  // median of per-alpha peak envelopes (peaks mode)
  ExponentFit fit;
  std::optional<double> expected_slope;
  std::optional<bool> within_tolerance;
  std::vector<ReferenceRow> references;
};

// Throws ValidationError for an invalid plan before any computation.
void validate_plan(const ExperimentPlan& plan);
ExperimentReport run_experiment(const ExperimentPlan& plan);

// Pointwise median (mean of the middle pair for even counts).
double median_of(std::vector<double> values);

// Point generator for ({a_n alpha}).
PointSource make_point_source(const SequenceSpec& spec, const BlockSchedule* schedule, const Alpha& alpha);

std::string report_to_json(const ExperimentReport& report);
// Writes report.json and one series CSV per alpha into dir.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace eqlab
