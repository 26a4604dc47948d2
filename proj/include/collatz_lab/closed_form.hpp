#pragma once

// Parity sequences, the remainder r_k(m) and the closed-form iterate
//
//   T^k(m) = (m / 2^k + r_k(m)) * 3^(p_0 + ... + p_{k-1}),
//   r_k(m) = sum_{i<k} p_i / (3^(p_0 + ... + p_i) * 2^(k-i)),
//
// all in exact rational arithmetic.

#include "collatz_lab/maps.hpp"
#include "collatz_lab/natural.hpp"
#include "collatz_lab/rational.hpp"

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace collatz_lab {

/// bits[i] == 1 iff T^i(m) is odd.
class ParityVector {
 public:
  ParityVector() = default;
  explicit ParityVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_) {
      if (b > 1) throw PreconditionError("parity vector entries must be 0 or 1");
    }
  }
  /// Bit i of mask becomes entry i.
  static ParityVector from_mask(std::uint64_t mask, std::size_t length) {
    std::vector<std::uint8_t> bits(length);
    for (std::size_t i = 0; i < length; ++i) bits[i] = static_cast<std::uint8_t>((mask >> i) & 1u);
    return ParityVector(std::move(bits));
  }

  std::size_t size() const noexcept { return bits_.size(); }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
  std::uint64_t ones() const { return std::accumulate(bits_.begin(), bits_.end(), std::uint64_t{0}); }
  std::uint64_t mask() const {
    if (bits_.size() > 64) throw PreconditionError("parity vector longer than 64 has no mask");
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i) m |= std::uint64_t{bits_[i]} << i;
    return m;
  }
  ParityVector slice(std::size_t offset, std::size_t length) const {
    if (offset + length > bits_.size()) throw std::out_of_range("parity vector slice");
    return ParityVector({bits_.begin() + static_cast<std::ptrdiff_t>(offset),
                         bits_.begin() + static_cast<std::ptrdiff_t>(offset + length)});
  }
  std::string str() const {
    std::string s;
    for (auto b : bits_) s.push_back(static_cast<char>('0' + b));
    return s;
  }
  friend bool operator==(const ParityVector&, const ParityVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

inline ParityVector parity_vector(const BigInt& m, std::size_t k) {
  if (sign(m) <= 0) throw PreconditionError("parity_vector: m must be >= 1");
  std::vector<std::uint8_t> bits(k);
  OrbitValue x(m);
  for (std::size_t i = 0; i < k; ++i) {
    bits[i] = x.odd() ? 1 : 0;
    x.t_step();
  }
  return ParityVector(std::move(bits));
}

/// r_k(m), summed term by term.
inline ExactRational r_k(const BigInt& m, std::size_t k) {
  const ParityVector p = parity_vector(m, k);
  ExactRational sum;
  std::size_t ones = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (p[i] == 0) continue;
    ++ones;
    sum += ExactRational(BigInt(1), pow3(ones) * pow2(k - i));
  }
  return sum;
}

namespace detail {
inline BigInt integral_or_throw(const ExactRational& v, const char* what) {
  if (!v.is_integer()) {
    throw std::logic_error(std::string(what) + ": closed form produced non-integer " + v.str());
  }
  return v.numerator();
}
}  // namespace detail

/// T^k(m) evaluated from the closed form. Throws std::logic_error if the
/// rational result is not integral, which no valid input can cause.
inline BigInt closed_form_iterate(const BigInt& m, std::size_t k) {
  const ExactRational r = r_k(m, k);
  const std::uint64_t ones = parity_vector(m, k).ones();
  ExactRational v = (ExactRational(m, pow2(k)) + r) * ExactRational(pow3(ones));
  return detail::integral_or_throw(v, "closed_form_iterate");
}

/// Checks r_{k+k0}(m) == 2^{-k} r_{k0}(m) + 3^{-(p_0+...+p_{k0-1})} r_k(T^{k0}(m)).
inline bool verify_split_identity(const BigInt& m, std::size_t k, std::size_t k0) {
  const ExactRational lhs = r_k(m, k + k0);
  BigInt shifted = m;
  for (std::size_t i = 0; i < k0; ++i) shifted = t_step(shifted);
  const std::uint64_t ones = parity_vector(m, k0).ones();
  const ExactRational rhs = r_k(m, k0) / ExactRational(pow2(k)) +
                            r_k(shifted, k) / ExactRational(pow3(ones));
  return lhs == rhs;
}

/// All remainders r_0(m) .. r_K(m) and closed-form iterates at once, via
/// the prefix sums s_k = sum_{i<k} p_i 2^i / 3^(p_0+...+p_i), r_k = s_k / 2^k.
/// Linear in K instead of quadratic; used by the bulk verifiers.
class ClosedFormSeries {
 public:
  ClosedFormSeries(const BigInt& m, std::size_t k_max) : m_(m), parity_(parity_vector(m, k_max)) {
    prefix_.reserve(k_max + 1);
    ones_.reserve(k_max + 1);
    ExactRational s;
    std::uint64_t ones = 0;
    prefix_.push_back(s);
    ones_.push_back(0);
    for (std::size_t i = 0; i < k_max; ++i) {
      if (parity_[i]) {
        ++ones;
        s += ExactRational(pow2(i), pow3(ones));
      }
      prefix_.push_back(s);
      ones_.push_back(ones);
    }
  }

  std::size_t k_max() const noexcept { return parity_.size(); }
  const ParityVector& parity() const noexcept { return parity_; }
  std::uint64_t ones(std::size_t k) const { return ones_.at(k); }
  const ExactRational& prefix(std::size_t k) const { return prefix_.at(k); }
  ExactRational remainder(std::size_t k) const { return prefix_.at(k) / ExactRational(pow2(k)); }
  BigInt iterate(std::size_t k) const {
    ExactRational v = (ExactRational(m_, pow2(k)) + remainder(k)) * ExactRational(pow3(ones(k)));
    return detail::integral_or_throw(v, "ClosedFormSeries::iterate");
  }

 private:
  BigInt m_;
  ParityVector parity_;
  std::vector<ExactRational> prefix_;
  std::vector<std::uint64_t> ones_;
};

}  // namespace collatz_lab
