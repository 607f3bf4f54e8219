#pragma once

// Exact representation of the rotation number alpha and of the fractional
// parts {a * alpha}. Values are only rounded once, in to_unit().

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/gmp.hpp>

namespace eqlab {

using BigInt = boost::multiprecision::mpz_int;

// Identifier of the pseudorandom generator behind sample_alpha(). Written
// into every report so a run can be reproduced from (generator, seed).
inline constexpr std::string_view kGeneratorId = "mt19937_64";
inline constexpr unsigned kMinPrecisionBits = 64;
inline constexpr unsigned kDefaultPrecisionBits = 192;

// A machine real in [0, 1).
struct UnitValue {
  double value = 0.0;
};

// Exact fraction num/den with 0 <= num < den. Not necessarily reduced.
struct ExactFraction {
  BigInt num;
  BigInt den{1};

  friend bool operator==(const ExactFraction& x, const ExactFraction& y) {
    return x.num * y.den == y.num * x.den;
  }
};

// alpha in [0, 1), either numerator / 2^P (P >= 64) or a reduced fraction.
class Alpha {
 public:
  enum class Kind { dyadic, rational };

  static Alpha dyadic(BigInt numerator, unsigned precision_bits);
  static Alpha rational(BigInt numerator, BigInt denominator);

  Kind kind() const noexcept { return kind_; }
  const BigInt& numerator() const noexcept { return num_; }
  // 2^P for dyadic values.
  const BigInt& denominator() const noexcept { return den_; }
  // P for dyadic values, 0 for rationals.
  unsigned precision_bits() const noexcept { return bits_; }
  bool is_zero() const { return num_ == 0; }
  double approx() const;

  // `dyadic:0x<hex>:<P>` or `rational:<num>/<den>`; parse() also accepts
  // `0x<hex>:<P>` and `golden:<P>`.
  std::string to_string() const;
  static Alpha parse(std::string_view text);

  friend bool operator==(const Alpha& x, const Alpha& y) {
    return x.kind_ == y.kind_ && x.num_ == y.num_ && x.den_ == y.den_;
  }

 private:
  Alpha(Kind kind, BigInt num, BigInt den, unsigned bits)
      : kind_(kind), num_(std::move(num)), den_(std::move(den)), bits_(bits) {}

  Kind kind_;
  BigInt num_;
  BigInt den_;
  unsigned bits_;
};

// Numerator = the first ceil(P/64) outputs of mt19937_64(seed), most
// significant word first, concatenated and shifted right to P bits.
Alpha sample_alpha(std::uint64_t seed, unsigned precision_bits = kDefaultPrecisionBits);

// floor(2^P * (sqrt(5) - 1) / 2) / 2^P.
Alpha golden_alpha(unsigned precision_bits = kDefaultPrecisionBits);

// Exactly {a * alpha}, for a >= 1.
ExactFraction frac_part(const BigInt& a, const Alpha& alpha);

// Largest double <= x (rounding toward zero), for x in [0, 1).
UnitValue to_unit(const ExactFraction& x);

// Bit length of a non-negative integer (0 for 0).
unsigned bit_length(const BigInt& x);

// Exact value of {x * alpha} kept as a residue modulo the denominator of
// alpha, supporting in-place modular addition. This is the fast path used by
// streams and exponential sums; it agrees with frac_part() bit for bit.
class ExactPhase {
 public:
  ExactPhase() = default;
  // {a * alpha}
  ExactPhase(const Alpha& alpha, std::uint64_t a);
  ExactPhase(const Alpha& alpha, const BigInt& a);

  void set_multiple(std::uint64_t a);
  // this = {this + other}; both must come from the same alpha.
  ExactPhase& operator+=(const ExactPhase& other);

  // floor(value * 2^64)
  std::uint64_t fixed64() const;
  UnitValue unit() const;
  ExactFraction exact() const;

 private:
  enum class Mode : std::uint8_t { dyadic, small_mod, big_mod };

  void init(const Alpha& alpha);
  unsigned __int128 top128() const;

  Mode mode_ = Mode::small_mod;
  unsigned bits_ = 0;               // dyadic P
  std::uint64_t top_mask_ = 0;      // dyadic: mask of the top limb
  std::uint64_t small_den_ = 1;     // small_mod denominator
  std::uint64_t small_num_ = 0;     // small_mod numerator of alpha
  std::vector<std::uint64_t> alpha_limbs_;  // dyadic numerator of alpha
  std::vector<std::uint64_t> limbs_;        // dyadic residue, little endian
  std::uint64_t small_ = 0;                 // small_mod residue
  BigInt big_num_;                          // big_mod numerator of alpha
  BigInt big_den_;
  BigInt big_;                              // big_mod residue
};

}  // namespace eqlab
