#pragma once

#include "collatz_lab/natural.hpp"

#include <boost/multiprecision/gmp.hpp>

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <string_view>

namespace collatz_lab {

/// Exact fraction, always in lowest terms with a positive denominator.
class ExactRational {
 public:
  ExactRational() = default;
  ExactRational(long v) : q_(v) {}  // NOLINT: integers convert implicitly
  ExactRational(const BigInt& v) : q_(v) {}  // NOLINT
  ExactRational(const BigInt& num, const BigInt& den) {
    if (collatz_lab::sign(den) == 0) throw PreconditionError("rational: zero denominator");
    q_ = Rep(num, den);  // canonicalized by the backend
  }

  /// Parses "3", "-0.125", "2.5e-3" or "5/36" exactly.
  static ExactRational parse(std::string_view text) {
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
      return ExactRational(parse_signed(text.substr(0, slash)), parse_signed(text.substr(slash + 1)));
    }
    std::string_view s = text;
    bool neg = false;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
      neg = s[0] == '-';
      s.remove_prefix(1);
    }
    long exp10 = 0;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
      std::string_view es = s.substr(e + 1);
      if (!es.empty() && es[0] == '+') es.remove_prefix(1);
      auto [p, ec] = std::from_chars(es.data(), es.data() + es.size(), exp10);
      if (ec != std::errc{} || p != es.data() + es.size()) bad(text);
      s = s.substr(0, e);
    }
    std::string digits;
    auto dot = s.find('.');
    std::string_view ip = s.substr(0, dot);
    std::string_view fp = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    digits.append(ip).append(fp);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) bad(text);
    exp10 -= static_cast<long>(fp.size());
    BigInt num = parse_natural(digits);
    BigInt den(1);
    BigInt ten(10);
    if (exp10 > 0) num *= boost::multiprecision::pow(ten, static_cast<unsigned>(exp10));
    if (exp10 < 0) den = boost::multiprecision::pow(ten, static_cast<unsigned>(-exp10));
    return ExactRational(neg ? BigInt(-num) : num, den);
  }

  /// The shortest decimal that round-trips to x, read exactly (0.1 -> 1/10).
  static ExactRational from_double(double x) {
    if (!std::isfinite(x)) throw PreconditionError("rational: non-finite value");
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return parse(std::string_view(buf, static_cast<std::size_t>(p - buf)));
  }

  BigInt numerator() const { return boost::multiprecision::numerator(q_); }
  BigInt denominator() const { return boost::multiprecision::denominator(q_); }
  bool is_integer() const { return denominator() == 1; }
  int sign() const { return q_.sign(); }
  double to_double() const { return q_.convert_to<double>(); }
  std::string str() const { return q_.str(); }

  ExactRational& operator+=(const ExactRational& o) { q_ += o.q_; return *this; }
  ExactRational& operator-=(const ExactRational& o) { q_ -= o.q_; return *this; }
  ExactRational& operator*=(const ExactRational& o) { q_ *= o.q_; return *this; }
  ExactRational& operator/=(const ExactRational& o) {
    if (o.sign() == 0) throw PreconditionError("rational: division by zero");
    q_ /= o.q_;
    return *this;
  }
  friend ExactRational operator+(ExactRational a, const ExactRational& b) { return a += b; }
  friend ExactRational operator-(ExactRational a, const ExactRational& b) { return a -= b; }
  friend ExactRational operator*(ExactRational a, const ExactRational& b) { return a *= b; }
  friend ExactRational operator/(ExactRational a, const ExactRational& b) { return a /= b; }
  ExactRational operator-() const { ExactRational r; r.q_ = -q_; return r; }

  friend bool operator==(const ExactRational& a, const ExactRational& b) { return a.q_ == b.q_; }
  friend bool operator<(const ExactRational& a, const ExactRational& b) { return a.q_ < b.q_; }
  friend bool operator<=(const ExactRational& a, const ExactRational& b) { return a.q_ <= b.q_; }
  friend bool operator>(const ExactRational& a, const ExactRational& b) { return a.q_ > b.q_; }
  friend bool operator>=(const ExactRational& a, const ExactRational& b) { return a.q_ >= b.q_; }

  friend std::ostream& operator<<(std::ostream& os, const ExactRational& r) { return os << r.str(); }

 private:
  using Rep = boost::multiprecision::mpq_rational;

  [[noreturn]] static void bad(std::string_view text) {
    throw PreconditionError("not a number: '" + std::string(text) + "'");
  }
  static BigInt parse_signed(std::string_view s) {
    bool neg = !s.empty() && s[0] == '-';
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) s.remove_prefix(1);
    BigInt v = parse_natural(s);
    return neg ? BigInt(-v) : v;
  }

  Rep q_;
};

}  // namespace collatz_lab
