#include "eqlab/cf.hpp"

#include <cmath>

#include "eqlab/errors.hpp"

namespace eqlab {

ConvergentTable cf_expand(const Alpha& alpha, const BigInt& q_bound) {
  if (q_bound < 1) throw ValidationError("q_bound must be >= 1");
  if (alpha.kind() == Alpha::Kind::dyadic) {
    const unsigned p = alpha.precision_bits();
    BigInt limit = 1;
    limit <<= (p - 64) / 2;
    if (q_bound > limit)
      throw ValidationError("q_bound exceeds 2^((P-64)/2) for a " + std::to_string(p) + "-bit dyadic alpha");
  }

  ConvergentTable table;
  if (alpha.is_zero()) {
    table.exhausted = true;
    return table;
  }
  BigInt num = alpha.numerator();
  BigInt den = alpha.denominator();
  BigInt p_prev = 1, q_prev = 0;  // index -1
  BigInt p_cur = 0, q_cur = 1;    // index 0
  while (true) {
    BigInt a = den / num;
    BigInt rem = den - a * num;
    BigInt p_next = a * p_cur + p_prev;
    BigInt q_next = a * q_cur + q_prev;
    table.partial_quotients.push_back(a);
    table.p.push_back(p_next);
    table.q.push_back(q_next);
    p_prev = std::move(p_cur);
    q_prev = std::move(q_cur);
    p_cur = std::move(p_next);
    q_cur = std::move(q_next);
    if (rem == 0) {
      table.exhausted = true;
      break;
    }
    if (q_cur > q_bound) break;
    den = std::move(num);
    num = std::move(rem);
  }
  return table;
}

GrowthReport growth_report(const ConvergentTable& table) {
  if (table.size() == 0) throw ValidationError("growth report of an empty convergent table");
  GrowthReport report;
  const double exponent = 1.0 + report.epsilon;
  for (std::size_t i = 0; i < table.partial_quotients.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    report.c_hat = std::max(report.c_hat, table.partial_quotients[i].convert_to<double>() / std::pow(k, exponent));
  }
  for (std::size_t i = 0; i + 1 < table.q.size(); ++i) {
    if (table.q[i] < 3) continue;
    const double q = table.q[i].convert_to<double>();
    const double ratio = table.q[i + 1].convert_to<double>() / (q * std::pow(std::log(q), exponent));
    report.c1_hat = std::max(report.c1_hat.value_or(0.0), ratio);
  }
  return report;
}

void write_table_csv(std::ostream& out, const ConvergentTable& table) {
  out << "l,a_l,p_l,q_l\n";
  for (std::size_t i = 0; i < table.size(); ++i)
    out << i + 1 << ',' << table.partial_quotients[i].str() << ',' << table.p[i].str() << ','
        << table.q[i].str() << '\n';
}

}  // namespace eqlab
