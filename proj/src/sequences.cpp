#include "eqlab/sequences.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include <mpfr.h>

#include "eqlab/errors.hpp"

namespace eqlab {

namespace {

using u128 = unsigned __int128;
using i128 = __int128;

constexpr std::uint64_t kSmallLimit = std::uint64_t{1} << 62;

// Minimal RAII holder for an MPFR value.
struct Mpfr {
  mpfr_t v;
  explicit Mpfr(mpfr_prec_t bits) { mpfr_init2(v, bits); }
  ~Mpfr() { mpfr_clear(v); }
  Mpfr(const Mpfr&) = delete;
  Mpfr& operator=(const Mpfr&) = delete;
};

BigInt ceil_to_int(const Mpfr& x) {
  BigInt out;
  mpfr_get_z(out.backend().data(), x.v, MPFR_RNDU);
  return out;
}

std::int64_t parse_i64(std::string_view text) {
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end)
    throw ValidationError("bad integer '" + std::string(text) + "'");
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Rational

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw ValidationError("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

Rational Rational::parse(std::string_view text) {
  if (const auto slash = text.find('/'); slash != std::string_view::npos)
    return make(parse_i64(text.substr(0, slash)), parse_i64(text.substr(slash + 1)));
  if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    const auto frac = text.substr(dot + 1);
    if (frac.size() > 15) throw ValidationError("too many decimals in '" + std::string(text) + "'");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::string whole = std::string(text.substr(0, dot)) + std::string(frac);
    return make(parse_i64(whole), den);
  }
  return make(parse_i64(text), 1);
}

std::string Rational::to_string() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

std::string to_string(Family family) {
  switch (family) {
    case Family::kronecker: return "kronecker";
    case Family::polynomial: return "polynomial";
    case Family::lacunary: return "lacunary";
    case Family::evil: return "evil";
    case Family::hybrid: return "hybrid";
  }
  return "?";
}

Family parse_family(std::string_view text) {
  for (auto f : {Family::kronecker, Family::polynomial, Family::lacunary, Family::evil, Family::hybrid})
    if (to_string(f) == text) return f;
  throw ValidationError("unknown family '" + std::string(text) + "'");
}

std::string to_string(ScheduleMode mode) {
  return mode == ScheduleMode::strict ? "strict" : "practical";
}

ScheduleMode parse_schedule_mode(std::string_view text) {
  if (text == "strict") return ScheduleMode::strict;
  if (text == "practical") return ScheduleMode::practical;
  throw ValidationError("unknown schedule mode '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// SequenceSpec

SequenceSpec SequenceSpec::kronecker() { return {}; }

SequenceSpec SequenceSpec::polynomial(std::vector<std::int64_t> coeffs) {
  SequenceSpec s;
  s.family = Family::polynomial;
  s.coeffs = std::move(coeffs);
  return s;
}

SequenceSpec SequenceSpec::lacunary(Rational ratio) {
  SequenceSpec s;
  s.family = Family::lacunary;
  s.ratio = ratio;
  return s;
}

SequenceSpec SequenceSpec::evil() {
  SequenceSpec s;
  s.family = Family::evil;
  return s;
}

SequenceSpec SequenceSpec::hybrid(Rational gamma, ScheduleMode mode, std::uint64_t m1, Rational rho,
                                  int blocks) {
  SequenceSpec s;
  s.family = Family::hybrid;
  s.gamma = gamma;
  s.mode = mode;
  s.m1 = m1;
  s.rho = rho;
  s.blocks = blocks;
  return s;
}

namespace {

BigInt eval_poly(const std::vector<std::int64_t>& coeffs, const BigInt& n) {
  BigInt acc = 0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * n + *it;
  return acc;
}

BigInt binomial(unsigned n, unsigned k) {
  BigInt r = 1;
  for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void validate_polynomial(const std::vector<std::int64_t>& c) {
  if (c.size() < 2 || c.back() <= 0)
    throw ValidationError("polynomial needs degree >= 1 and a positive leading coefficient");
  if (eval_poly(c, 1) < 1) throw ValidationError("polynomial must take positive values on n >= 1");
  // Forward difference f(n+1) - f(n); it has a positive leading coefficient,
  // so it is positive beyond its Cauchy root bound. Check the range below it.
  const unsigned d = static_cast<unsigned>(c.size() - 1);
  std::vector<BigInt> delta(d, 0);
  for (unsigned j = 0; j < d; ++j)
    for (unsigned i = j + 1; i <= d; ++i) delta[j] += binomial(i, j) * c[i];
  BigInt max_ratio = 0;
  for (unsigned j = 0; j + 1 < d; ++j) {
    BigInt r = abs(delta[j]) / delta[d - 1] + 1;
    max_ratio = std::max(max_ratio, r);
  }
  const BigInt bound = max_ratio + 1;
  if (bound > 1'000'000) throw ValidationError("cannot verify polynomial monotonicity");
  const auto limit = bound.convert_to<std::uint64_t>();
  for (std::uint64_t n = 1; n <= limit; ++n) {
    BigInt v = 0;
    for (auto it = delta.rbegin(); it != delta.rend(); ++it) v = v * n + *it;
    if (v <= 0) throw ValidationError("polynomial is not strictly increasing on n >= 1");
  }
}

}  // namespace

void SequenceSpec::validate() const {
  switch (family) {
    case Family::kronecker:
    case Family::evil:
      return;
    case Family::polynomial:
      validate_polynomial(coeffs);
      return;
    case Family::lacunary:
      if (ratio.num <= ratio.den) throw ValidationError("lacunary ratio must exceed 1");
      return;
    case Family::hybrid:
      if (gamma.num <= 0 || 2 * gamma.num > gamma.den)
        throw ValidationError("gamma must lie in (0, 1/2]");
      if (m1 < 1 || 2.0 * gamma.value() * std::log(static_cast<double>(m1)) < 1.0)
        throw ValidationError("m1 too small: log(m1^(2 gamma)) < 1");
      if (blocks < 1) throw ValidationError("blocks must be >= 1");
      if (mode == ScheduleMode::practical && (rho.num <= rho.den || rho.num > 2 * rho.den))
        throw ValidationError("rho must lie in (1, 2]");
      return;
  }
}

std::vector<std::pair<std::string, std::string>> SequenceSpec::describe() const {
  std::vector<std::pair<std::string, std::string>> kv{{"family", to_string(family)}};
  switch (family) {
    case Family::polynomial: {
      std::string list;
      for (std::size_t i = 0; i < coeffs.size(); ++i)
        list += (i ? "," : "") + std::to_string(coeffs[i]);
      kv.emplace_back("coeffs", list);
      break;
    }
    case Family::lacunary:
      kv.emplace_back("ratio", ratio.to_string());
      break;
    case Family::hybrid:
      kv.emplace_back("gamma", gamma.to_string());
      kv.emplace_back("mode", to_string(mode));
      kv.emplace_back("m1", std::to_string(m1));
      if (mode == ScheduleMode::practical) kv.emplace_back("rho", rho.to_string());
      kv.emplace_back("blocks", std::to_string(blocks));
      break;
    default:
      break;
  }
  return kv;
}

bool SequenceSpec::is_pure_square() const {
  return family == Family::polynomial && coeffs == std::vector<std::int64_t>{0, 0, 1};
}

// ---------------------------------------------------------------------------
// BlockSchedule

BlockSchedule BlockSchedule::from_lengths(std::vector<BigInt> m, std::vector<BigInt> e) {
  if (m.empty() || e.empty()) throw ValidationError("schedule needs at least one m and one e");
  if (m.size() != e.size() && m.size() != e.size() + 1)
    throw ValidationError("schedule needs |m| = |e| or |m| = |e| + 1");
  auto check_increasing = [](const std::vector<BigInt>& v, const char* name) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] < 1) throw ValidationError(std::string(name) + " entries must be positive");
      if (i > 0 && v[i] <= v[i - 1])
        throw ValidationError(std::string(name) + " must be strictly increasing");
    }
  };
  check_increasing(m, "m");
  check_increasing(e, "e");

  BlockSchedule s;
  s.m_ = std::move(m);
  s.e_ = std::move(e);
  BigInt value_end = 0;  // B_{j-1}
  BigInt index_end = 0;  // E_{j-1}
  for (std::size_t j = 0; j < s.m_.size(); ++j) {
    s.a_.push_back(value_end + s.m_[j]);
    s.f_.push_back(index_end + s.m_[j]);
    if (j < s.e_.size()) {
      value_end = s.a_.back() + s.e_[j] * s.e_[j];
      index_end = s.f_.back() + s.e_[j];
      s.b_.push_back(value_end);
      s.e_end_.push_back(index_end);
    }
  }
  return s;
}

const BigInt& BlockSchedule::coverage() const {
  return m_.size() > e_.size() ? f_.back() : e_end_.back();
}

bool BlockSchedule::consistent() const {
  const auto fresh = from_lengths(m_, e_);
  if (fresh.a_ != a_ || fresh.b_ != b_ || fresh.f_ != f_ || fresh.e_end_ != e_end_) return false;
  // F_s / E_s against their closed sums.
  BigInt sum_m = 0, sum_e = 0;
  for (std::size_t s = 0; s < f_.size(); ++s) {
    sum_m += m_[s];
    if (f_[s] != sum_m + sum_e) return false;
    if (s < e_.size()) {
      sum_e += e_[s];
      if (e_end_[s] != sum_m + sum_e) return false;
    }
  }
  return true;
}

namespace {

mpfr_prec_t working_bits(double magnitude_log2) {
  return static_cast<mpfr_prec_t>(std::max(128.0, magnitude_log2 + 128.0));
}

// ceil(exp(sqrt(e))); exp(sqrt(e)) is transcendental, so rounding up a
// sufficiently precise approximation is exact.
BigInt ceil_exp_sqrt(const BigInt& e) {
  const double root = std::sqrt(e.convert_to<double>());
  if (!(root < 4.0e6)) throw ValidationError("strict schedule exceeds representable size");
  Mpfr x(working_bits(root * 1.4426950408889634 + bit_length(e)));
  mpfr_set_z(x.v, e.backend().data(), MPFR_RNDN);
  mpfr_sqrt(x.v, x.v, MPFR_RNDN);
  mpfr_exp(x.v, x.v, MPFR_RNDN);
  return ceil_to_int(x);
}

// Smallest k with k^den >= e^num, i.e. ceil(e^(num/den)), exactly.
BigInt ceil_rational_power(const BigInt& e, Rational rho) {
  const double log2_est = rho.value() * bit_length(e);
  Mpfr x(working_bits(log2_est));
  mpfr_set_z(x.v, e.backend().data(), MPFR_RNDN);
  Mpfr exponent(64);
  mpfr_set_si(exponent.v, rho.num, MPFR_RNDN);
  mpfr_div_si(exponent.v, exponent.v, rho.den, MPFR_RNDN);
  mpfr_pow(x.v, x.v, exponent.v, MPFR_RNDN);
  BigInt k = ceil_to_int(x);
  const BigInt target = boost::multiprecision::pow(e, static_cast<unsigned>(rho.num));
  const auto den = static_cast<unsigned>(rho.den);
  while (k > 1 && boost::multiprecision::pow(BigInt(k - 1), den) >= target) --k;
  while (boost::multiprecision::pow(k, den) < target) ++k;
  return k;
}

}  // namespace

BigInt quadratic_run_length(const BigInt& f, Rational gamma) {
  // x = F^{2 gamma}; x / log x is transcendental for algebraic x != 1.
  Mpfr x(working_bits(2.0 * gamma.value() * bit_length(f)));
  mpfr_set_z(x.v, f.backend().data(), MPFR_RNDN);
  Mpfr exponent(64);
  mpfr_set_si(exponent.v, 2 * gamma.num, MPFR_RNDN);
  mpfr_div_si(exponent.v, exponent.v, gamma.den, MPFR_RNDN);
  mpfr_pow(x.v, x.v, exponent.v, MPFR_RNDN);
  Mpfr lg(mpfr_get_prec(x.v));
  mpfr_log(lg.v, x.v, MPFR_RNDN);
  if (mpfr_cmp_ui(lg.v, 1) < 0) throw ValidationError("log(F^(2 gamma)) < 1");
  mpfr_div(x.v, x.v, lg.v, MPFR_RNDN);
  return ceil_to_int(x);
}

namespace {

template <typename NextLinear>
BlockSchedule build_schedule(Rational gamma, const BigInt& m1, Rational rho, int blocks,
                             ScheduleMode mode, NextLinear next_linear) {
  SequenceSpec spec = SequenceSpec::hybrid(gamma, mode, 1, rho, blocks);
  if (m1 < 1 || m1 > BigInt(std::numeric_limits<std::uint64_t>::max()))
    throw ValidationError("m1 out of range");
  spec.m1 = m1.convert_to<std::uint64_t>();
  spec.validate();

  std::vector<BigInt> m{m1};
  std::vector<BigInt> e{quadratic_run_length(m1, gamma)};
  BigInt index_end = m1 + e.back();  // E_1
  for (int l = 2; l <= blocks; ++l) {
    m.push_back(std::max(BigInt(m.back() + 1), next_linear(index_end)));
    const BigInt f = index_end + m.back();
    e.push_back(std::max(BigInt(e.back() + 1), quadratic_run_length(f, gamma)));
    index_end = f + e.back();
  }
  return BlockSchedule::from_lengths(std::move(m), std::move(e));
}

}  // namespace

BlockSchedule make_schedule_strict(Rational gamma, const BigInt& m1, int blocks) {
  return build_schedule(gamma, m1, Rational{5, 4}, blocks, ScheduleMode::strict,
                        [](const BigInt& e_prev) { return ceil_exp_sqrt(e_prev); });
}

BlockSchedule make_schedule_practical(Rational gamma, const BigInt& m1, Rational rho, int blocks) {
  return build_schedule(gamma, m1, rho, blocks, ScheduleMode::practical,
                        [rho](const BigInt& e_prev) { return ceil_rational_power(e_prev, rho); });
}

BlockSchedule make_schedule(const SequenceSpec& spec) {
  if (spec.family != Family::hybrid) throw ValidationError("schedules exist only for hybrid specs");
  return spec.mode == ScheduleMode::strict
             ? make_schedule_strict(spec.gamma, spec.m1, spec.blocks)
             : make_schedule_practical(spec.gamma, spec.m1, spec.rho, spec.blocks);
}

// ---------------------------------------------------------------------------
// Terms

namespace {

bool is_evil(std::uint64_t x) { return (std::popcount(x) & 1) == 0; }

BigInt next_lacunary(const BigInt& a, Rational ratio) {
  BigInt scaled = a * ratio.num;
  BigInt next = scaled / ratio.den;
  if (next * ratio.den != scaled) next += 1;
  return std::max(BigInt(a + 1), next);
}

BigInt hybrid_term(const BlockSchedule& s, const BigInt& n) {
  if (n > s.coverage())
    throw RangeError("index " + n.str() + " beyond schedule coverage " + s.coverage().str());
  const auto& f = s.F();
  const auto& e_end = s.E();
  // first block whose linear run ends at or after n
  const auto it = std::lower_bound(f.begin(), f.end(), n);
  const auto i = static_cast<std::size_t>(it - f.begin());
  if (it != f.end() && (i == 0 || n > e_end[i - 1])) {
    const BigInt base_value = i == 0 ? BigInt(0) : s.B()[i - 1];
    const BigInt base_index = i == 0 ? BigInt(0) : e_end[i - 1];
    return base_value + (n - base_index);
  }
  const std::size_t q = i - 1;  // n lies in quadratic run q
  const BigInt k = n - f[q];
  return s.A()[q] + k * k;
}

}  // namespace

BigInt seq_term(const SequenceSpec& spec, const BlockSchedule* schedule, const BigInt& n) {
  if (n < 1) throw ValidationError("sequence index must be >= 1");
  switch (spec.family) {
    case Family::kronecker:
      return n;
    case Family::polynomial:
      return eval_poly(spec.coeffs, n);
    case Family::lacunary: {
      BigInt a = 1;
      for (BigInt i = 1; i < n; ++i) a = next_lacunary(a, spec.ratio);
      return a;
    }
    case Family::evil: {
      std::uint64_t x = 0;
      for (BigInt i = 0; i < n; ++i) {
        do ++x;
        while (!is_evil(x));
      }
      return BigInt(x);
    }
    case Family::hybrid:
      if (!schedule) throw ValidationError("hybrid sequence needs a schedule");
      return hybrid_term(*schedule, n);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// SequenceStream

SequenceStream::SequenceStream(SequenceSpec spec, const BlockSchedule* schedule)
    : spec_(std::move(spec)), schedule_(schedule) {
  spec_.validate();
  if (spec_.family == Family::hybrid) {
    if (!schedule_) throw ValidationError("hybrid sequence needs a schedule");
    const auto& s = *schedule_;
    const BigInt& last_value = s.m().size() > s.e().size() ? s.A().back() : s.B().back();
    hybrid_small_ = last_value < kSmallLimit;
    big_mode_ = !hybrid_small_;
    run_ = 0;
    run_pos_s_ = 0;
    run_pos_ = 0;
    if (hybrid_small_) {
      run_len_s_ = s.m()[0].convert_to<std::uint64_t>();
      run_base_s_ = 0;
    } else {
      run_len_ = s.m()[0];
      run_base_ = 0;
    }
  }
}

void SequenceStream::next_hybrid_run() {
  const auto& s = *schedule_;
  ++run_;
  const std::size_t block = run_ / 2;
  const bool linear = run_ % 2 == 0;
  if ((linear && block >= s.m().size()) || (!linear && block >= s.e().size()))
    throw RangeError("stream index " + std::to_string(index_) + " beyond schedule coverage");
  const BigInt& len = linear ? s.m()[block] : s.e()[block];
  const BigInt& base = linear ? s.B()[block - 1] : s.A()[block];
  if (hybrid_small_) {
    run_len_s_ = len.convert_to<std::uint64_t>();
    run_base_s_ = base.convert_to<std::uint64_t>();
    run_pos_s_ = 0;
  } else {
    run_len_ = len;
    run_base_ = base;
    run_pos_ = 0;
  }
}

void SequenceStream::advance_small() {
  switch (spec_.family) {
    case Family::kronecker:
      small_ = index_;
      return;
    case Family::polynomial: {
      // Horner in 128 bits; leave the fast path once values get large.
      i128 acc = 0;
      const i128 n = index_;
      for (auto it = spec_.coeffs.rbegin(); it != spec_.coeffs.rend(); ++it) {
        acc = acc * n + *it;
        if (acc > static_cast<i128>(kSmallLimit) || acc < -static_cast<i128>(kSmallLimit)) {
          big_mode_ = true;
          big_ = eval_poly(spec_.coeffs, BigInt(index_));
          return;
        }
      }
      small_ = static_cast<std::uint64_t>(acc);
      return;
    }
    case Family::lacunary: {
      if (index_ == 1) {
        small_ = 1;
        return;
      }
      const u128 scaled = static_cast<u128>(small_) * static_cast<std::uint64_t>(spec_.ratio.num);
      const auto den = static_cast<std::uint64_t>(spec_.ratio.den);
      u128 next = scaled / den + (scaled % den != 0 ? 1 : 0);
      if (next < static_cast<u128>(small_) + 1) next = static_cast<u128>(small_) + 1;
      if (next > kSmallLimit) {
        big_mode_ = true;
        big_ = next_lacunary(BigInt(small_), spec_.ratio);
        return;
      }
      small_ = static_cast<std::uint64_t>(next);
      return;
    }
    case Family::evil:
      do ++small_;
      while (!is_evil(small_));
      return;
    case Family::hybrid:
      while (run_pos_s_ == run_len_s_) next_hybrid_run();
      ++run_pos_s_;
      small_ = run_base_s_ + (run_ % 2 == 0 ? run_pos_s_ : run_pos_s_ * run_pos_s_);
      return;
  }
}

void SequenceStream::advance_big() {
  switch (spec_.family) {
    case Family::kronecker:
      big_ = index_;
      return;
    case Family::polynomial:
      big_ = eval_poly(spec_.coeffs, BigInt(index_));
      return;
    case Family::lacunary:
      big_ = next_lacunary(big_, spec_.ratio);
      return;
    case Family::evil:
      throw RangeError("evil stream exhausted the 64-bit range");
    case Family::hybrid:
      while (run_pos_ == run_len_) next_hybrid_run();
      ++run_pos_;
      big_ = run_base_ + (run_ % 2 == 0 ? run_pos_ : BigInt(run_pos_ * run_pos_));
      return;
  }
}

void SequenceStream::advance() {
  ++index_;
  if (big_mode_)
    advance_big();
  else
    advance_small();
}

// ---------------------------------------------------------------------------
// Dumps

void write_sequence_dump(std::ostream& out, const SequenceSpec& spec, const BlockSchedule* schedule,
                         std::uint64_t count, bool header) {
  if (header)
    for (const auto& [k, v] : spec.describe()) out << "# " << k << '=' << v << '\n';
  SequenceStream stream(spec, schedule);
  for (std::uint64_t i = 0; i < count; ++i) {
    stream.advance();
    if (stream.fits_u64())
      out << stream.term_u64() << '\n';
    else
      out << stream.term().str() << '\n';
  }
}

SequenceDump read_sequence_dump(std::istream& in) {
  SequenceDump dump;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto body = line.substr(1);
      body.erase(0, body.find_first_not_of(' '));
      const auto eq = body.find('=');
      if (eq != std::string::npos) dump.header.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    if (line.find_first_not_of("0123456789") != std::string::npos)
      throw ValidationError("sequence dump line " + std::to_string(line_no) + " is not a decimal integer");
    BigInt term;
    mpz_set_str(term.backend().data(), line.c_str(), 10);
    if (term < 1) throw ValidationError("sequence dump terms must be positive");
    dump.terms.push_back(std::move(term));
  }
  return dump;
}

}  // namespace eqlab
