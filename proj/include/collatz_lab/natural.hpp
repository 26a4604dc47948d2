#pragma once

// Arbitrary-precision integers and the small set of bit-level helpers the
// orbit code needs. BigInt is signed (generalized maps act on Z); callers
// that need a positive integer say so in their preconditions.

#include <boost/multiprecision/gmp.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace collatz_lab {

using BigInt = boost::multiprecision::mpz_int;
using u128 = unsigned __int128;

/// Thrown when an operation is called outside its documented domain.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {
inline mpz_srcptr raw(const BigInt& x) { return x.backend().data(); }
inline mpz_ptr raw(BigInt& x) { return x.backend().data(); }
}  // namespace detail

inline bool is_odd(const BigInt& x) { return mpz_odd_p(detail::raw(x)) != 0; }
inline bool is_odd(std::uint64_t x) { return (x & 1u) != 0; }
inline bool is_odd(u128 x) { return (x & 1u) != 0; }

inline int sign(const BigInt& x) { return mpz_sgn(detail::raw(x)); }

/// Number of significant bits; 0 for zero.
inline std::size_t bit_length(const BigInt& x) {
  return sign(x) == 0 ? 0 : mpz_sizeinbase(detail::raw(x), 2);
}
inline std::size_t bit_length(std::uint64_t x) {
  return x == 0 ? 0 : 64 - static_cast<std::size_t>(__builtin_clzll(x));
}

/// 2-adic valuation of a non-zero value.
inline unsigned nu2(const BigInt& x) {
  if (sign(x) == 0) throw PreconditionError("nu2: argument must be non-zero");
  return static_cast<unsigned>(mpz_scan1(detail::raw(x), 0));
}
inline unsigned nu2(std::uint64_t x) {
  if (x == 0) throw PreconditionError("nu2: argument must be non-zero");
  return static_cast<unsigned>(__builtin_ctzll(x));
}

/// Residue of a non-negative x modulo 2^bits, bits <= 64.
inline std::uint64_t low_bits(const BigInt& x, unsigned bits) {
  std::uint64_t limb = mpz_size(detail::raw(x)) == 0
                           ? 0
                           : static_cast<std::uint64_t>(mpz_getlimbn(detail::raw(x), 0));
  return bits >= 64 ? limb : limb & ((std::uint64_t{1} << bits) - 1);
}

inline std::optional<std::uint64_t> to_u64(const BigInt& x) {
  if (sign(x) < 0 || bit_length(x) > 64) return std::nullopt;
  return low_bits(x, 64);
}

inline BigInt to_big(std::uint64_t x) { return BigInt(x); }
inline BigInt to_big(u128 x) {
  BigInt hi(static_cast<std::uint64_t>(x >> 64));
  hi <<= 64;
  hi += static_cast<std::uint64_t>(x);
  return hi;
}

inline std::optional<u128> to_u128(const BigInt& x) {
  if (sign(x) < 0 || bit_length(x) > 128) return std::nullopt;
  BigInt hi = x >> 64;
  return (static_cast<u128>(low_bits(hi, 64)) << 64) | low_bits(x, 64);
}

inline BigInt pow2(std::size_t e) {
  BigInt r;
  mpz_setbit(detail::raw(r), e);
  return r;
}

inline BigInt pow3(std::size_t e) {
  BigInt r;
  mpz_ui_pow_ui(detail::raw(r), 3, static_cast<unsigned long>(e));
  return r;
}

/// Natural logarithm of a positive integer, accurate to a few ulps.
inline double ln(const BigInt& x) {
  long exp = 0;
  double mant = mpz_get_d_2exp(&exp, detail::raw(x));
  return std::log(mant) + static_cast<double>(exp) * std::log(2.0);
}
inline double ln(std::uint64_t x) { return std::log(static_cast<double>(x)); }

/// Parses a non-negative decimal integer; rejects signs, blanks and junk.
inline BigInt parse_natural(std::string_view text) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string_view::npos) {
    throw PreconditionError("not a non-negative integer: '" + std::string(text) + "'");
  }
  BigInt v;
  mpz_set_str(detail::raw(v), std::string(text).c_str(), 10);  // base 10: no octal for leading zeros
  return v;
}

}  // namespace collatz_lab
