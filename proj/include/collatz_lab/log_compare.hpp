#pragma once

// Sign of sum_i c_i * ln(b_i) for exact rational coefficients c_i and
// positive integers b_i. Every bound of the form
//   (sqrt(3)/2)^k m^(1-eps) <= T^k(m),   r_k(m) 3^(k/2) m^(-eps) < 1, ...
// is such a sign test after taking logarithms.
//
// Evaluation escalates: double with an error bound, then MPFR at
// increasing precision, then an exact comparison of integer powers
// prod b_i^(L c_i) when the exponents are small enough to materialize.

#include "collatz_lab/natural.hpp"
#include "collatz_lab/rational.hpp"

#include <mpfr.h>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace collatz_lab {

struct MathConstants {
  static constexpr double log2_sqrt3 = 0.79248125036057809073;        // log2(sqrt 3)
  static constexpr double range_coeff = 4.81884167930641800916;       // 1 / (1 - log2 sqrt 3)
  static constexpr double natural_log_coeff = 6.95211899356441382075; // 2 / ln(4/3)
  static constexpr double terras_coeff = 1.44269504088896340736;      // 1 / ln 2
  static constexpr double syracuse_coeff = 2.40942083965320900458;    // 1 / log2(4/3)
  static constexpr double col_coeff = 7.22826251895962701375;         // 3 / (2 - log2 3)
};

inline constexpr double kLn2 = 0.69314718055994530942;
inline constexpr double kLn3 = 1.09861228866810969140;

class LogLinearForm {
 public:
  struct Term {
    ExactRational coeff;
    BigInt base;  // >= 1
  };

  LogLinearForm() = default;

  /// Adds coeff * ln(base); terms with the same base are merged.
  LogLinearForm& add(const ExactRational& coeff, const BigInt& base) {
    if (collatz_lab::sign(base) <= 0) throw PreconditionError("log form: base must be positive");
    if (coeff.sign() == 0 || base == 1) return *this;
    for (auto& t : terms_) {
      if (t.base == base) {
        t.coeff += coeff;
        return *this;
      }
    }
    terms_.push_back({coeff, base});
    return *this;
  }
  LogLinearForm& add(const LogLinearForm& other, const ExactRational& scale = ExactRational(1)) {
    for (const auto& t : other.terms_) add(t.coeff * scale, t.base);
    return *this;
  }

  const std::vector<Term>& terms() const noexcept { return terms_; }

  double approx() const {
    double s = 0;
    for (const auto& t : terms_) s += t.coeff.to_double() * ln(t.base);
    return s;
  }

  /// -1, 0 or +1. Zero means exactly zero, or (when the exact route is too
  /// large to materialize) zero to more than 4000 bits of precision.
  int sign() const {
    std::vector<Term> live;
    for (const auto& t : terms_) {
      if (t.coeff.sign() != 0 && t.base != 1) live.push_back(t);
    }
    if (live.empty()) return 0;

    double s = 0, mag = 0;
    for (const auto& t : live) {
      double v = t.coeff.to_double() * ln(t.base);
      s += v;
      mag += std::fabs(v);
    }
    if (std::fabs(s) > mag * 0x1p-44) return s > 0 ? 1 : -1;

    for (mpfr_prec_t prec : {256, 1024, 4096}) {
      if (int r = mpfr_sign(live, prec); r != 0) return r;
    }
    return exact_sign(live);
  }

 private:
  // Returns 0 if the result is inside the rounding error band.
  static int mpfr_sign(const std::vector<Term>& live, mpfr_prec_t prec) {
    mpfr_t acc, mag, x;
    mpfr_inits2(prec, acc, mag, x, static_cast<mpfr_ptr>(nullptr));
    mpfr_set_zero(acc, 1);
    mpfr_set_zero(mag, 1);
    mpq_t q;
    mpq_init(q);
    for (const auto& t : live) {
      mpfr_set_z(x, detail::raw(t.base), MPFR_RNDN);
      mpfr_log(x, x, MPFR_RNDN);
      mpq_set_num(q, detail::raw(t.coeff.numerator()));
      mpq_set_den(q, detail::raw(t.coeff.denominator()));
      mpfr_mul_q(x, x, q, MPFR_RNDN);
      mpfr_add(acc, acc, x, MPFR_RNDN);
      mpfr_abs(x, x, MPFR_RNDN);
      mpfr_add(mag, mag, x, MPFR_RNDN);
    }
    // Each term carries a few ulps; the band is generous.
    mpfr_mul_2si(mag, mag, -static_cast<long>(prec) + 16, MPFR_RNDU);
    mpfr_abs(x, acc, MPFR_RNDN);
    int r = mpfr_cmp(x, mag) > 0 ? mpfr_sgn(acc) : 0;
    mpq_clear(q);
    mpfr_clears(acc, mag, x, static_cast<mpfr_ptr>(nullptr));
    return r > 0 ? 1 : (r < 0 ? -1 : 0);
  }

  static int exact_sign(const std::vector<Term>& live) {
    BigInt lcm(1);
    for (const auto& t : live) lcm = boost::multiprecision::lcm(lcm, t.coeff.denominator());
    double cost_bits = 0;
    std::vector<BigInt> exps;
    for (const auto& t : live) {
      exps.push_back(t.coeff.numerator() * (lcm / t.coeff.denominator()));
      cost_bits += std::fabs(exps.back().convert_to<double>()) * static_cast<double>(bit_length(t.base));
    }
    if (cost_bits > double(1 << 24)) return 0;
    BigInt lhs(1), rhs(1);
    for (std::size_t i = 0; i < live.size(); ++i) {
      const auto e = static_cast<unsigned>(boost::multiprecision::abs(exps[i]).convert_to<unsigned long>());
      BigInt p = boost::multiprecision::pow(live[i].base, e);
      if (exps[i] > 0) {
        lhs *= p;
      } else {
        rhs *= p;
      }
    }
    return lhs > rhs ? 1 : (lhs < rhs ? -1 : 0);
  }

  std::vector<Term> terms_;
};

/// Largest integer j >= 0 with j * unit <= budget, where unit > 0 and both
/// quantities are log-linear forms; -1 if budget < 0. The double estimates
/// decide whenever they are not within 1e-9 of an integer boundary.
template <class MakeBudget, class MakeUnit>
std::int64_t floor_quotient(double budget_approx, double unit_approx, MakeBudget&& make_budget,
                            MakeUnit&& make_unit) {
  const double q = budget_approx / unit_approx;
  const double f = std::floor(q);
  if (q - f > 1e-9 && f + 1 - q > 1e-9) return f < 0 ? -1 : static_cast<std::int64_t>(f);

  const LogLinearForm budget = make_budget();
  const LogLinearForm unit = make_unit();
  auto fits = [&](std::int64_t j) {  // j * unit <= budget
    LogLinearForm diff = budget;
    diff.add(unit, ExactRational(-static_cast<long>(j)));
    return diff.sign() >= 0;
  };
  if (!fits(0)) return -1;
  auto j = static_cast<std::int64_t>(std::max(0.0, std::round(q)));
  while (j > 0 && !fits(j)) --j;
  while (fits(j + 1)) ++j;
  return j;
}

}  // namespace collatz_lab
