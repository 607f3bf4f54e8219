#include "eqlab/realnum.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <random>

#include "eqlab/errors.hpp"

namespace eqlab {

namespace {

using u128 = unsigned __int128;

std::vector<std::uint64_t> to_limbs(const BigInt& x, std::size_t count) {
  std::vector<std::uint64_t> limbs(count, 0);
  std::size_t written = 0;
  mpz_export(limbs.data(), &written, -1, sizeof(std::uint64_t), 0, 0, x.backend().data());
  if (written > count) throw std::logic_error("to_limbs: value wider than limb count");
  return limbs;
}

BigInt from_limbs(const std::vector<std::uint64_t>& limbs) {
  BigInt x;
  mpz_import(x.backend().data(), limbs.size(), -1, sizeof(std::uint64_t), 0, 0, limbs.data());
  return x;
}

BigInt pow2(unsigned bits) {
  BigInt x = 1;
  x <<= bits;
  return x;
}

unsigned bit_width128(u128 x) {
  const auto hi = static_cast<std::uint64_t>(x >> 64);
  if (hi != 0) return 64 + static_cast<unsigned>(std::bit_width(hi));
  return static_cast<unsigned>(std::bit_width(static_cast<std::uint64_t>(x)));
}

// Truncation of W / 2^128 to a double, valid when W has >= 53 significant bits.
bool truncate_top128(u128 w, double& out) {
  const unsigned k = bit_width128(w);
  if (k < 53) return false;
  const auto q = static_cast<std::uint64_t>(w >> (k - 53));
  out = std::ldexp(static_cast<double>(q), static_cast<int>(k) - 53 - 128);
  return true;
}

u128 big_to_u128(const BigInt& x) {
  const auto limbs = to_limbs(x, 2);
  return (static_cast<u128>(limbs[1]) << 64) | limbs[0];
}

}  // namespace

unsigned bit_length(const BigInt& x) {
  if (x == 0) return 0;
  return static_cast<unsigned>(mpz_sizeinbase(x.backend().data(), 2));
}

// ---------------------------------------------------------------------------
// Alpha

Alpha Alpha::dyadic(BigInt numerator, unsigned precision_bits) {
  if (precision_bits < kMinPrecisionBits)
    throw ValidationError("invalid precision: dyadic alpha needs P >= 64, got " +
                          std::to_string(precision_bits));
  if (numerator < 0) throw ValidationError("alpha numerator must be non-negative");
  BigInt den = pow2(precision_bits);
  if (numerator >= den) throw ValidationError("dyadic alpha numerator must be < 2^P");
  return Alpha(Kind::dyadic, std::move(numerator), std::move(den), precision_bits);
}

Alpha Alpha::rational(BigInt numerator, BigInt denominator) {
  if (denominator <= 0) throw ValidationError("alpha denominator must be positive");
  if (numerator < 0 || numerator >= denominator)
    throw ValidationError("rational alpha must lie in [0, 1)");
  const BigInt g = boost::multiprecision::gcd(numerator, denominator);
  if (numerator == 0) return Alpha(Kind::rational, 0, 1, 0);
  return Alpha(Kind::rational, numerator / g, denominator / g, 0);
}

double Alpha::approx() const { return to_unit({num_, den_}).value; }

std::string Alpha::to_string() const {
  if (kind_ == Kind::rational) return "rational:" + num_.str() + "/" + den_.str();
  std::string hex = num_.str(0, std::ios_base::hex);
  for (auto& c : hex) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return "dyadic:0x" + hex + ":" + std::to_string(bits_);
}

namespace {

unsigned parse_bits(std::string_view text) {
  unsigned value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ValidationError("bad precision in alpha: '" + std::string(text) + "'");
  return value;
}

BigInt parse_big(std::string_view text, int base) {
  if (text.empty()) throw ValidationError("empty integer in alpha");
  for (char c : text) {
    const bool ok = base == 16 ? std::isxdigit(static_cast<unsigned char>(c)) != 0
                               : std::isdigit(static_cast<unsigned char>(c)) != 0;
    if (!ok) throw ValidationError("bad digit in alpha: '" + std::string(text) + "'");
  }
  BigInt x;
  mpz_set_str(x.backend().data(), std::string(text).c_str(), base);
  return x;
}

Alpha parse_hex_form(std::string_view body) {
  // 0x<hex>:<P>
  if (body.substr(0, 2) != "0x") throw ValidationError("dyadic alpha must start with 0x");
  const auto colon = body.find(':');
  if (colon == std::string_view::npos) throw ValidationError("dyadic alpha needs ':<P>'");
  return Alpha::dyadic(parse_big(body.substr(2, colon - 2), 16), parse_bits(body.substr(colon + 1)));
}

}  // namespace

Alpha Alpha::parse(std::string_view text) {
  if (text.rfind("dyadic:", 0) == 0) return parse_hex_form(text.substr(7));
  if (text.rfind("0x", 0) == 0) return parse_hex_form(text);
  if (text.rfind("golden:", 0) == 0) return golden_alpha(parse_bits(text.substr(7)));
  if (text.rfind("rational:", 0) == 0) {
    const auto body = text.substr(9);
    const auto slash = body.find('/');
    if (slash == std::string_view::npos) throw ValidationError("rational alpha needs '<num>/<den>'");
    return Alpha::rational(parse_big(body.substr(0, slash), 10), parse_big(body.substr(slash + 1), 10));
  }
  throw ValidationError("unrecognised alpha '" + std::string(text) + "'");
}

Alpha sample_alpha(std::uint64_t seed, unsigned precision_bits) {
  if (precision_bits < kMinPrecisionBits)
    throw ValidationError("invalid precision: need at least 64 bits, got " +
                          std::to_string(precision_bits));
  std::mt19937_64 rng(seed);
  const unsigned words = (precision_bits + 63) / 64;
  BigInt numerator = 0;
  for (unsigned i = 0; i < words; ++i) {
    numerator <<= 64;
    numerator += BigInt(static_cast<std::uint64_t>(rng()));
  }
  numerator >>= words * 64 - precision_bits;
  return Alpha::dyadic(std::move(numerator), precision_bits);
}

Alpha golden_alpha(unsigned precision_bits) {
  if (precision_bits < kMinPrecisionBits)
    throw ValidationError("invalid precision: need at least 64 bits");
  const BigInt scaled_sqrt5 = boost::multiprecision::sqrt(BigInt(5) << (2 * precision_bits));
  return Alpha::dyadic((scaled_sqrt5 - pow2(precision_bits)) >> 1, precision_bits);
}

ExactFraction frac_part(const BigInt& a, const Alpha& alpha) {
  if (a < 1) throw ValidationError("frac_part: multiplier must be >= 1");
  return {(a * alpha.numerator()) % alpha.denominator(), alpha.denominator()};
}

UnitValue to_unit(const ExactFraction& x) {
  if (x.num < 0 || x.den <= 0 || x.num >= x.den)
    throw ValidationError("to_unit: value outside [0, 1)");
  if (x.num == 0) return {0.0};
  // Scale so the quotient carries exactly 53 significant bits.
  long shift = 53 + static_cast<long>(bit_length(x.den)) - static_cast<long>(bit_length(x.num));
  BigInt q = (x.num << shift) / x.den;
  if (bit_length(q) > 53) {
    q >>= 1;
    --shift;
  }
  if (shift > 1074) {
    // subnormal range: the grid is 2^-1074
    q = (x.num << 1074) / x.den;
    shift = 1074;
  }
  return {std::ldexp(q.convert_to<double>(), static_cast<int>(-shift))};
}

// ---------------------------------------------------------------------------
// ExactPhase

void ExactPhase::init(const Alpha& alpha) {
  if (alpha.kind() == Alpha::Kind::dyadic) {
    mode_ = Mode::dyadic;
    bits_ = alpha.precision_bits();
    const std::size_t count = (bits_ + 63) / 64;
    const unsigned top_bits = bits_ - 64 * static_cast<unsigned>(count - 1);
    top_mask_ = top_bits == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << top_bits) - 1);
    alpha_limbs_ = to_limbs(alpha.numerator(), count);
    limbs_.assign(count, 0);
  } else if (alpha.denominator() <= BigInt(std::numeric_limits<std::uint64_t>::max())) {
    mode_ = Mode::small_mod;
    small_den_ = alpha.denominator().convert_to<std::uint64_t>();
    small_num_ = alpha.numerator().convert_to<std::uint64_t>();
  } else {
    mode_ = Mode::big_mod;
    big_num_ = alpha.numerator();
    big_den_ = alpha.denominator();
  }
}

ExactPhase::ExactPhase(const Alpha& alpha, std::uint64_t a) {
  init(alpha);
  set_multiple(a);
}

ExactPhase::ExactPhase(const Alpha& alpha, const BigInt& a) {
  init(alpha);
  if (a < 0) throw ValidationError("ExactPhase: negative multiplier");
  switch (mode_) {
    case Mode::dyadic:
      limbs_ = to_limbs((a * alpha.numerator()) % alpha.denominator(), limbs_.size());
      break;
    case Mode::small_mod:
      small_ = ((a * small_num_) % small_den_).convert_to<std::uint64_t>();
      break;
    case Mode::big_mod:
      big_ = (a * big_num_) % big_den_;
      break;
  }
}

void ExactPhase::set_multiple(std::uint64_t a) {
  switch (mode_) {
    case Mode::dyadic: {
      u128 carry = 0;
      for (std::size_t i = 0; i < limbs_.size(); ++i) {
        const u128 t = static_cast<u128>(alpha_limbs_[i]) * a + carry;
        limbs_[i] = static_cast<std::uint64_t>(t);
        carry = t >> 64;
      }
      limbs_.back() &= top_mask_;
      break;
    }
    case Mode::small_mod:
      small_ = static_cast<std::uint64_t>(static_cast<u128>(a % small_den_) * small_num_ % small_den_);
      break;
    case Mode::big_mod:
      big_ = (BigInt(a) * big_num_) % big_den_;
      break;
  }
}

ExactPhase& ExactPhase::operator+=(const ExactPhase& other) {
  switch (mode_) {
    case Mode::dyadic: {
      std::uint64_t carry = 0;
      for (std::size_t i = 0; i < limbs_.size(); ++i) {
        const u128 t = static_cast<u128>(limbs_[i]) + other.limbs_[i] + carry;
        limbs_[i] = static_cast<std::uint64_t>(t);
        carry = static_cast<std::uint64_t>(t >> 64);
      }
      limbs_.back() &= top_mask_;
      break;
    }
    case Mode::small_mod: {
      const u128 t = static_cast<u128>(small_) + other.small_;
      small_ = static_cast<std::uint64_t>(t >= small_den_ ? t - small_den_ : t);
      break;
    }
    case Mode::big_mod:
      big_ += other.big_;
      if (big_ >= big_den_) big_ -= big_den_;
      break;
  }
  return *this;
}

u128 ExactPhase::top128() const {
  switch (mode_) {
    case Mode::dyadic: {
      // 64 bits of the residue starting at bit `pos`; bits below 0 read as 0.
      auto word_at = [this](long pos) -> std::uint64_t {
        if (pos <= -64) return 0;
        if (pos < 0) {
          return limbs_[0] << (-pos);
        }
        const auto idx = static_cast<std::size_t>(pos / 64);
        const unsigned off = static_cast<unsigned>(pos % 64);
        std::uint64_t w = idx < limbs_.size() ? limbs_[idx] >> off : 0;
        if (off != 0 && idx + 1 < limbs_.size()) w |= limbs_[idx + 1] << (64 - off);
        return w;
      };
      const long p = static_cast<long>(bits_);
      return (static_cast<u128>(word_at(p - 64)) << 64) | word_at(p - 128);
    }
    case Mode::small_mod: {
      const u128 shifted = static_cast<u128>(small_) << 64;
      const u128 hi = shifted / small_den_;
      const u128 rem = shifted % small_den_;
      const u128 lo = (rem << 64) / small_den_;
      return (hi << 64) | lo;
    }
    case Mode::big_mod:
      return big_to_u128((big_ << 128) / big_den_);
  }
  return 0;
}

std::uint64_t ExactPhase::fixed64() const { return static_cast<std::uint64_t>(top128() >> 64); }

UnitValue ExactPhase::unit() const {
  double out = 0.0;
  if (truncate_top128(top128(), out)) return {out};
  return to_unit(exact());
}

ExactFraction ExactPhase::exact() const {
  switch (mode_) {
    case Mode::dyadic:
      return {from_limbs(limbs_), pow2(bits_)};
    case Mode::small_mod:
      return {BigInt(small_), BigInt(small_den_)};
    case Mode::big_mod:
      return {big_, big_den_};
  }
  return {};
}

}  // namespace eqlab
