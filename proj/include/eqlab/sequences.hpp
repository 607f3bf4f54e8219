#pragma once

// Integer sequences (a_n): Kronecker n, integer polynomials, lacunary
// sequences, evil numbers (even binary digit sum) and the hybrid sequence made
// of linear runs interleaved with runs of shifted squares.

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "eqlab/realnum.hpp"

namespace eqlab {

// Reduced p/q with q > 0.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  // "3/10", "0.3", "2"
  static Rational parse(std::string_view text);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string to_string() const;

  friend bool operator==(const Rational&, const Rational&) = default;
};

enum class Family { kronecker, polynomial, lacunary, evil, hybrid };
enum class ScheduleMode { strict, practical };

std::string to_string(Family family);
Family parse_family(std::string_view text);
std::string to_string(ScheduleMode mode);
ScheduleMode parse_schedule_mode(std::string_view text);

struct SequenceSpec {
  Family family = Family::kronecker;
  // polynomial: constant term first
  std::vector<std::int64_t> coeffs;
  // lacunary growth ratio, > 1
  Rational ratio{2, 1};
  // hybrid parameters
  Rational gamma{1, 2};
  ScheduleMode mode = ScheduleMode::practical;
  std::uint64_t m1 = 64;
  Rational rho{5, 4};
  int blocks = 1;

  static SequenceSpec kronecker();
  static SequenceSpec polynomial(std::vector<std::int64_t> coeffs);
  static SequenceSpec lacunary(Rational ratio);
  static SequenceSpec evil();
  static SequenceSpec hybrid(Rational gamma, ScheduleMode mode, std::uint64_t m1, Rational rho,
                             int blocks);

  // Throws ValidationError when a family invariant does not hold.
  void validate() const;
  // key=value pairs used in dump headers and report plan echoes.
  std::vector<std::pair<std::string, std::string>> describe() const;
  bool is_pure_square() const;
};

// Run lengths (m_j), (e_j) of the hybrid construction plus the derived
// values A_j, B_j (sequence values at run ends) and F_s, E_s (index counts).
//
//   F_s = sum_{i<=s} m_i + sum_{i<s} e_i,  E_s = F_s + e_s
//   A_j = B_{j-1} + m_j,                   B_j = A_j + e_j^2,   B_0 = 0
//
// m may hold one more entry than e, in which case the schedule ends with a
// linear run and covers indices up to F_{L+1}.
class BlockSchedule {
 public:
  static BlockSchedule from_lengths(std::vector<BigInt> m, std::vector<BigInt> e);

  const std::vector<BigInt>& m() const noexcept { return m_; }
  const std::vector<BigInt>& e() const noexcept { return e_; }
  const std::vector<BigInt>& A() const noexcept { return a_; }
  const std::vector<BigInt>& B() const noexcept { return b_; }
  const std::vector<BigInt>& F() const noexcept { return f_; }
  const std::vector<BigInt>& E() const noexcept { return e_end_; }

  std::size_t quadratic_blocks() const noexcept { return e_.size(); }
  // Largest index n for which a_n is defined.
  const BigInt& coverage() const;
  // Recomputes every derived list from (m, e) and compares.
  bool consistent() const;

 private:
  std::vector<BigInt> m_, e_, a_, b_, f_, e_end_;
};

// Quadratic run length: e = ceil(F^{2 gamma} / log(F^{2 gamma})).
BigInt quadratic_run_length(const BigInt& f, Rational gamma);

// m_l = max(m_{l-1} + 1, ceil(exp(sqrt(E_{l-1})))), the smallest choice with
// (log m_l)^2 >= E_{l-1}. Only a handful of blocks are representable.
BlockSchedule make_schedule_strict(Rational gamma, const BigInt& m1, int blocks);
// m_l = max(m_{l-1} + 1, ceil(E_{l-1}^rho)), 1 < rho <= 2.
BlockSchedule make_schedule_practical(Rational gamma, const BigInt& m1, Rational rho, int blocks);
// Dispatches on spec.mode; spec must be hybrid.
BlockSchedule make_schedule(const SequenceSpec& spec);

// n-th term (n >= 1). Hybrid specs need a schedule covering n.
BigInt seq_term(const SequenceSpec& spec, const BlockSchedule* schedule, const BigInt& n);

// Single-pass generator of a_1, a_2, ...; keeps terms in a machine word while
// they fit and falls back to BigInt afterwards.
class SequenceStream {
 public:
  explicit SequenceStream(SequenceSpec spec, const BlockSchedule* schedule = nullptr);

  // Moves to the next term. The first call yields a_1.
  void advance();

  std::uint64_t index() const noexcept { return index_; }
  bool fits_u64() const noexcept { return !big_mode_; }
  std::uint64_t term_u64() const noexcept { return small_; }
  BigInt term() const { return big_mode_ ? big_ : BigInt(small_); }

 private:
  void advance_small();
  void advance_big();
  void next_hybrid_run();

  SequenceSpec spec_;
  const BlockSchedule* schedule_;
  std::uint64_t index_ = 0;
  bool big_mode_ = false;
  std::uint64_t small_ = 0;
  BigInt big_;

  // hybrid run state: run r covers m_{r/2} (even r) or e_{r/2} (odd r)
  std::size_t run_ = 0;
  bool hybrid_small_ = true;
  BigInt run_len_, run_base_, run_pos_;
  std::uint64_t run_len_s_ = 0, run_base_s_ = 0, run_pos_s_ = 0;
};

// Newline-separated decimal terms, optionally preceded by `# key=value` lines.
void write_sequence_dump(std::ostream& out, const SequenceSpec& spec, const BlockSchedule* schedule,
                         std::uint64_t count, bool header);

struct SequenceDump {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<BigInt> terms;
};
SequenceDump read_sequence_dump(std::istream& in);

}  // namespace eqlab
