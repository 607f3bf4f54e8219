#include "eqlab/cli.hpp"

#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "eqlab/cf.hpp"
#include "eqlab/discrepancy.hpp"
#include "eqlab/errors.hpp"
#include "eqlab/experiments.hpp"
#include "eqlab/sequences.hpp"
#include "eqlab/weyl.hpp"

namespace eqlab {

namespace {

using nlohmann::json;

struct SequenceFlags {
  std::string family;
  std::string coeffs = "0,0,1";
  std::string ratio = "2";
  std::string gamma = "1/2";
  std::uint64_t m1 = 64;
  std::string rho = "5/4";
  std::string mode = "practical";
  int blocks = 0;  // 0: as many as needed for the requested length
};

void add_sequence_flags(CLI::App* app, SequenceFlags& f, bool required) {
  auto* fam = app->add_option("--family", f.family, "kronecker|polynomial|lacunary|evil|hybrid");
  if (required) fam->required();
  app->add_option("--coeffs", f.coeffs, "polynomial coefficients, constant term first");
  app->add_option("--ratio", f.ratio, "lacunary growth ratio");
  app->add_option("--gamma", f.gamma, "hybrid exponent in (0, 1/2]");
  app->add_option("--m1", f.m1, "hybrid first linear run length");
  app->add_option("--rho", f.rho, "practical schedule growth exponent in (1, 2]");
  app->add_option("--mode", f.mode, "strict|practical");
  app->add_option("--blocks", f.blocks, "hybrid quadratic runs");
}

SequenceSpec build_spec(const SequenceFlags& f) {
  SequenceSpec spec;
  spec.family = parse_family(f.family);
  switch (spec.family) {
    case Family::polynomial: {
      std::stringstream ss(f.coeffs);
      std::string item;
      while (std::getline(ss, item, ',')) spec.coeffs.push_back(Rational::parse(item).num);
      break;
    }
    case Family::lacunary:
      spec.ratio = Rational::parse(f.ratio);
      break;
    case Family::hybrid:
      spec.gamma = Rational::parse(f.gamma);
      spec.m1 = f.m1;
      spec.rho = Rational::parse(f.rho);
      spec.mode = parse_schedule_mode(f.mode);
      spec.blocks = f.blocks > 0 ? f.blocks : 1;
      break;
    default:
      break;
  }
  spec.validate();
  return spec;
}

// Builds a schedule covering `length` terms unless --blocks fixes the count.
std::optional<BlockSchedule> build_schedule(SequenceSpec& spec, const SequenceFlags& f, std::uint64_t length) {
  if (spec.family != Family::hybrid) return std::nullopt;
  if (f.blocks > 0) return make_schedule(spec);
  for (spec.blocks = 1;; ++spec.blocks) {
    auto s = make_schedule(spec);
    if (s.coverage() >= BigInt(length) || spec.blocks >= 64) return s;
  }
}

Alpha resolve_alpha(const std::string& alpha_text, std::optional<std::uint64_t> seed, unsigned precision) {
  if (!alpha_text.empty() && seed) throw ValidationError("use either --alpha or --seed, not both");
  if (!alpha_text.empty()) return Alpha::parse(alpha_text);
  if (seed) return sample_alpha(*seed, precision);
  throw ValidationError("one of --alpha or --seed is required");
}

// Output sink: --out file or the data stream. Opened only after validation.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot open " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : fallback_; }

 private:
  std::ostream& fallback_;
  std::unique_ptr<std::ofstream> file_;
};

void check_format(const std::string& format) {
  if (format != "csv" && format != "json") throw ValidationError("--format must be csv or json");
}

json series_json(const DiscrepancySeries& s) {
  json arr = json::array();
  for (const auto& e : s.entries) arr.push_back({{"N", e.n}, {"D_N", e.d}, {"ND_N", e.nd}});
  return arr;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"eqlab: discrepancy of ({a_n alpha}) for linear, quadratic and hybrid sequences"};
  app.require_subcommand(1);

  // gen
  SequenceFlags gen_seq;
  std::uint64_t gen_n = 0;
  bool gen_header = false;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "dump the first N terms of a sequence");
  add_sequence_flags(gen, gen_seq, true);
  gen->add_option("--n", gen_n, "number of terms")->required()->check(CLI::PositiveNumber);
  gen->add_flag("--header", gen_header, "prefix '# key=value' lines");
  gen->add_option("--out", gen_out, "output file (default: standard output)");

  // disc
  SequenceFlags disc_seq;
  std::string disc_alpha, disc_checkpoints, disc_points_file, disc_out, disc_format = "csv";
  std::optional<std::uint64_t> disc_seed;
  unsigned disc_precision = kDefaultPrecisionBits;
  auto* disc = app.add_subcommand("disc", "prefix discrepancy series of ({a_n alpha})");
  add_sequence_flags(disc, disc_seq, false);
  disc->add_option("--alpha", disc_alpha, "dyadic:0x<hex>:<P>, 0x<hex>:<P>, rational:<p>/<q>, golden:<P>");
  disc->add_option("--seed", disc_seed, "sample alpha from this seed");
  disc->add_option("--precision", disc_precision, "bits of a sampled alpha");
  disc->add_option("--checkpoints", disc_checkpoints, "geo:<b>^<e>:<max> | list:<n,...> | blocks")->required();
  disc->add_option("--points-file", disc_points_file, "read a_n from a sequence dump instead of --family");
  disc->add_option("--format", disc_format, "csv|json");
  disc->add_option("--out", disc_out, "output file");

  // cf
  std::string cf_alpha, cf_qbound, cf_out, cf_format = "csv";
  std::optional<std::uint64_t> cf_seed;
  unsigned cf_precision = kDefaultPrecisionBits;
  auto* cf = app.add_subcommand("cf", "continued fraction convergents of alpha");
  cf->add_option("--alpha", cf_alpha, "alpha");
  cf->add_option("--seed", cf_seed, "sample alpha from this seed");
  cf->add_option("--precision", cf_precision, "bits of a sampled alpha");
  cf->add_option("--qbound", cf_qbound, "largest denominator of interest")->required();
  cf->add_option("--format", cf_format, "csv|json");
  cf->add_option("--out", cf_out, "output file");

  // weyl
  std::string weyl_alpha, weyl_checkpoints, weyl_out, weyl_qbound = "1000000";
  std::optional<std::uint64_t> weyl_seed;
  unsigned weyl_precision = kDefaultPrecisionBits;
  std::uint64_t weyl_y = 0;
  bool weyl_witnesses = false;
  auto* weyl = app.add_subcommand("weyl", "quadratic Weyl sums and Behnke witnesses");
  weyl->add_option("--alpha", weyl_alpha, "alpha");
  weyl->add_option("--seed", weyl_seed, "sample alpha from this seed");
  weyl->add_option("--precision", weyl_precision, "bits of a sampled alpha");
  weyl->add_option("--y", weyl_y, "number of terms");
  weyl->add_option("--checkpoints", weyl_checkpoints, "checkpoints within [1, Y] (default geo:2^0.5:Y)");
  weyl->add_flag("--witnesses", weyl_witnesses, "emit Behnke witnesses per convergent instead");
  weyl->add_option("--qbound", weyl_qbound, "convergent bound for --witnesses");
  weyl->add_option("--out", weyl_out, "output file");

  // exper
  std::string exper_plan, exper_out = "eqlab_out";
  auto* exper = app.add_subcommand("exper", "run a Monte-Carlo experiment plan");
  exper->add_option("--plan", exper_plan, "plan JSON file")->required();
  exper->add_option("--out", exper_out, "output directory");

  // bounds
  std::string bounds_list;
  std::string bounds_format = "csv";
  auto* bounds = app.add_subcommand("bounds", "reference envelopes at given N");
  bounds->add_option("--n-list", bounds_list, "comma separated N >= 3")->required();
  bounds->add_option("--format", bounds_format, "csv|json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*gen) {
      SequenceSpec spec = build_spec(gen_seq);
      const auto schedule = build_schedule(spec, gen_seq, gen_n);
      if (schedule && schedule->coverage() < BigInt(gen_n))
        throw ValidationError("schedule covers only " + schedule->coverage().str() + " terms");
      Sink sink(gen_out, out);
      write_sequence_dump(sink.stream(), spec, schedule ? &*schedule : nullptr, gen_n, gen_header);
      return kExitOk;
    }

    if (*disc) {
      check_format(disc_format);
      const Alpha alpha = resolve_alpha(disc_alpha, disc_seed, disc_precision);
      DiscrepancySeries series;
      if (!disc_points_file.empty()) {
        if (!disc_seq.family.empty()) throw ValidationError("--points-file and --family are exclusive");
        std::ifstream in(disc_points_file);
        if (!in) throw ValidationError("cannot read " + disc_points_file);
        const auto dump = read_sequence_dump(in);
        const auto checkpoints = parse_checkpoints(disc_checkpoints, nullptr);
        if (checkpoints.back() > dump.terms.size())
          throw ValidationError("checkpoint beyond the " + std::to_string(dump.terms.size()) + " terms in the file");
        std::size_t pos = 0;
        series = prefix_series(
            [&](std::span<double> buf) {
              std::size_t i = 0;
              for (; i < buf.size() && pos < dump.terms.size(); ++i, ++pos)
                buf[i] = ExactPhase(alpha, dump.terms[pos]).unit().value;
              return i;
            },
            checkpoints);
      } else {
        if (disc_seq.family.empty()) throw ValidationError("one of --family or --points-file is required");
        SequenceSpec spec = build_spec(disc_seq);
        std::optional<BlockSchedule> schedule;
        std::vector<std::uint64_t> checkpoints;
        if (spec.family == Family::hybrid) {
          std::uint64_t want = 1;
          if (disc_checkpoints != "blocks") want = parse_checkpoints(disc_checkpoints, nullptr).back();
          schedule = build_schedule(spec, disc_seq, want);
        }
        checkpoints = parse_checkpoints(disc_checkpoints, schedule ? &*schedule : nullptr);
        if (schedule && BigInt(checkpoints.back()) > schedule->coverage())
          throw ValidationError("checkpoints beyond schedule coverage " + schedule->coverage().str());
        series = prefix_series(make_point_source(spec, schedule ? &*schedule : nullptr, alpha), checkpoints);
      }
      Sink sink(disc_out, out);
      if (disc_format == "csv") {
        write_series_csv(sink.stream(), series);
      } else {
        sink.stream() << json{{"alpha", alpha.to_string()}, {"series", series_json(series)}}.dump(2) << '\n';
      }
      return kExitOk;
    }

    if (*cf) {
      check_format(cf_format);
      const Alpha alpha = resolve_alpha(cf_alpha, cf_seed, cf_precision);
      if (cf_qbound.find_first_not_of("0123456789") != std::string::npos || cf_qbound.empty())
        throw ValidationError("--qbound must be a positive integer");
      const auto table = cf_expand(alpha, BigInt(cf_qbound));
      Sink sink(cf_out, out);
      if (cf_format == "csv") {
        write_table_csv(sink.stream(), table);
      } else {
        json rows = json::array();
        for (std::size_t i = 0; i < table.size(); ++i)
          rows.push_back({{"l", i + 1}, {"a_l", table.partial_quotients[i].str()}, {"p_l", table.p[i].str()},
                          {"q_l", table.q[i].str()}});
        json j{{"alpha", alpha.to_string()}, {"exhausted", table.exhausted}, {"convergents", rows}};
        if (table.size() > 0) {
          const auto g = growth_report(table);
          j["growth"] = {{"epsilon", g.epsilon}, {"c_hat", g.c_hat}};
          if (g.c1_hat) j["growth"]["c1_hat"] = *g.c1_hat;
        }
        sink.stream() << j.dump(2) << '\n';
      }
      return kExitOk;
    }

    if (*weyl) {
      const Alpha alpha = resolve_alpha(weyl_alpha, weyl_seed, weyl_precision);
      if (weyl_witnesses) {
        if (weyl_qbound.find_first_not_of("0123456789") != std::string::npos || weyl_qbound.empty())
          throw ValidationError("--qbound must be a positive integer");
        const BigInt qbound(weyl_qbound);
        const auto table = cf_expand(alpha, qbound);
        const auto witnesses = behnke_search(alpha, table, qbound);
        Sink sink(weyl_out, out);
        write_witness_csv(sink.stream(), witnesses);
        return kExitOk;
      }
      if (weyl_y < 1) throw ValidationError("--y must be >= 1");
      const auto checkpoints = weyl_checkpoints.empty() ? geometric_grid(std::sqrt(2.0), weyl_y)
                                                        : parse_checkpoints(weyl_checkpoints, nullptr, weyl_y);
      const auto series = weyl_sum(alpha, weyl_y, checkpoints);
      Sink sink(weyl_out, out);
      write_weyl_csv(sink.stream(), series);
      return kExitOk;
    }

    if (*exper) {
      std::ifstream in(exper_plan);
      if (!in) throw ValidationError("cannot read plan " + exper_plan);
      std::stringstream text;
      text << in.rdbuf();
      const auto plan = plan_from_json(text.str());
      validate_plan(plan);
      const auto report = run_experiment(plan);
      write_report(report, exper_out);
      out << "slope=" << format_real(report.fit.slope) << " stderr=" << format_real(report.fit.stderr_slope)
          << " points=" << report.fit.points_used << " report=" << (std::filesystem::path(exper_out) / "report.json").string()
          << '\n';
      return kExitOk;
    }

    if (*bounds) {
      check_format(bounds_format);
      std::vector<std::uint64_t> ns;
      std::stringstream ss(bounds_list);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
          throw ValidationError("bad N '" + item + "'");
        ns.push_back(std::stoull(item));
      }
      const auto rows = reference_bounds(ns);
      if (bounds_format == "csv") {
        out << "N,baker,khintchine,fjk\n";
        for (const auto& r : rows)
          out << r.n << ',' << format_real(r.baker) << ',' << format_real(r.khintchine) << ',' << format_real(r.fjk)
              << '\n';
      } else {
        json arr = json::array();
        for (const auto& r : rows) arr.push_back({{"N", r.n}, {"baker", r.baker}, {"khintchine", r.khintchine}, {"fjk", r.fjk}});
        out << arr.dump(2) << '\n';
      }
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace eqlab
