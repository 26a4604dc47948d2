#pragma once

// Single steps and orbits of the Collatz map C, the halved map T, the
// Syracuse map and generalized (p, q_i, k_i) maps.

#include "collatz_lab/natural.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace collatz_lab {

inline constexpr std::uint64_t kDefaultStepBudget = 1'000'000;

enum class MapKind { T, C, Syracuse, Generalized };

inline std::string_view to_string(MapKind kind) {
  switch (kind) {
    case MapKind::T: return "t";
    case MapKind::C: return "col";
    case MapKind::Syracuse: return "syr";
    case MapKind::Generalized: return "gen";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Single steps on arbitrary-precision values.

inline BigInt t_step(const BigInt& m) {
  if (sign(m) <= 0) throw PreconditionError("t_step: m must be >= 1");
  BigInt r;
  if (is_odd(m)) {
    mpz_mul_ui(detail::raw(r), detail::raw(m), 3);
    mpz_add_ui(detail::raw(r), detail::raw(r), 1);
    mpz_fdiv_q_2exp(detail::raw(r), detail::raw(r), 1);
  } else {
    mpz_fdiv_q_2exp(detail::raw(r), detail::raw(m), 1);
  }
  return r;
}

inline BigInt col_step(const BigInt& m) {
  if (sign(m) <= 0) throw PreconditionError("col_step: m must be >= 1");
  if (is_odd(m)) return 3 * m + 1;
  return m >> 1;
}

inline BigInt syracuse_step(const BigInt& m) {
  if (sign(m) <= 0 || !is_odd(m)) {
    throw PreconditionError("syracuse_step: m must be an odd positive integer");
  }
  BigInt r = 3 * m + 1;
  mpz_fdiv_q_2exp(detail::raw(r), detail::raw(r), nu2(r));
  return r;
}

// ---------------------------------------------------------------------------
// Fixed-width steps. They return false on overflow and leave m untouched.

namespace detail {

inline bool try_t_step(std::uint64_t& m) noexcept {
  if ((m & 1u) == 0) {
    m >>= 1;
    return true;
  }
  // (3m+1)/2 == m + (m >> 1) + 1 for odd m
  std::uint64_t r;
  if (__builtin_add_overflow(m, (m >> 1) + 1, &r)) return false;
  m = r;
  return true;
}

inline bool try_col_step(std::uint64_t& m) noexcept {
  if ((m & 1u) == 0) {
    m >>= 1;
    return true;
  }
  std::uint64_t r;
  if (__builtin_mul_overflow(m, std::uint64_t{3}, &r) || __builtin_add_overflow(r, 1u, &r)) {
    return false;
  }
  m = r;
  return true;
}

inline bool try_syracuse_step(std::uint64_t& m) noexcept {
  std::uint64_t r;
  if (__builtin_mul_overflow(m, std::uint64_t{3}, &r) || __builtin_add_overflow(r, 1u, &r)) {
    return false;
  }
  m = r >> __builtin_ctzll(r);
  return true;
}

}  // namespace detail

inline std::uint64_t t_step(std::uint64_t m) {
  if (m == 0) throw PreconditionError("t_step: m must be >= 1");
  if (!detail::try_t_step(m)) throw std::overflow_error("t_step: result exceeds 64 bits");
  return m;
}

// ---------------------------------------------------------------------------

/// A positive orbit value that lives in a machine word while it fits and
/// moves to arbitrary precision when a step would overflow.
class OrbitValue {
 public:
  explicit OrbitValue(std::uint64_t m) : small_(m) {}
  explicit OrbitValue(const BigInt& m) { assign(m); }

  bool is_small() const noexcept { return !wide_; }
  std::uint64_t small() const noexcept { return small_; }
  BigInt value() const { return wide_ ? big_ : BigInt(small_); }

  bool odd() const { return wide_ ? is_odd(big_) : (small_ & 1u) != 0; }
  bool is_one() const noexcept { return !wide_ && small_ == 1; }
  double log() const { return wide_ ? ln(big_) : ln(small_); }
  std::size_t bits() const { return wide_ ? bit_length(big_) : bit_length(small_); }

  void t_step() {
    if (!wide_ && detail::try_t_step(small_)) return;
    promote();
    big_ = collatz_lab::t_step(big_);
    demote();
  }
  void col_step() {
    if (!wide_ && detail::try_col_step(small_)) return;
    promote();
    big_ = collatz_lab::col_step(big_);
    demote();
  }
  void syracuse_step() {
    if (!wide_ && detail::try_syracuse_step(small_)) return;
    promote();
    big_ = collatz_lab::syracuse_step(big_);
    demote();
  }

  friend bool operator<(const OrbitValue& a, const OrbitValue& b) {
    if (!a.wide_ && !b.wide_) return a.small_ < b.small_;
    if (a.wide_ != b.wide_) return !a.wide_;  // wide values never fit a word
    return a.big_ < b.big_;
  }
  friend bool operator==(const OrbitValue& a, const OrbitValue& b) {
    if (a.wide_ != b.wide_) return false;
    return a.wide_ ? a.big_ == b.big_ : a.small_ == b.small_;
  }

 private:
  void assign(const BigInt& m) {
    if (auto s = to_u64(m)) {
      small_ = *s;
      wide_ = false;
    } else {
      big_ = m;
      wide_ = true;
    }
  }
  void promote() {
    if (!wide_) {
      big_ = small_;
      wide_ = true;
    }
  }
  void demote() {
    if (bit_length(big_) <= 64) {
      small_ = low_bits(big_, 64);
      wide_ = false;
    }
  }

  std::uint64_t small_ = 0;
  BigInt big_;
  bool wide_ = false;
};

// ---------------------------------------------------------------------------

/// The map m -> (q_i m + k_i) / p for m = i (mod p).
class GeneralizedMap {
 public:
  GeneralizedMap(std::uint32_t p, std::vector<std::int64_t> q, std::vector<std::int64_t> k)
      : p_(p), q_(std::move(q)), k_(std::move(k)) {
    if (p_ == 0) throw PreconditionError("generalized map: modulus p must be >= 1");
    if (q_.size() != p_ || k_.size() != p_) {
      throw PreconditionError("generalized map: q and k must have exactly p entries");
    }
    for (std::uint32_t i = 0; i < p_; ++i) {
      if (q_[i] < 1) throw PreconditionError("generalized map: q_i must be positive");
      __int128 v = static_cast<__int128>(q_[i]) * i + k_[i];
      if (v % p_ != 0) {
        throw PreconditionError("generalized map: q_" + std::to_string(i) + "*" +
                                std::to_string(i) + " + k_" + std::to_string(i) +
                                " is not divisible by p");
      }
    }
  }

  /// The halved map T expressed as (p=2, q=(1,3), k=(0,1)).
  static GeneralizedMap halved_collatz() { return GeneralizedMap(2, {1, 3}, {0, 1}); }

  std::uint32_t modulus() const noexcept { return p_; }
  const std::vector<std::int64_t>& multipliers() const noexcept { return q_; }
  const std::vector<std::int64_t>& offsets() const noexcept { return k_; }

  BigInt step(const BigInt& m) const {
    BigInt residue;
    mpz_fdiv_r_ui(detail::raw(residue), detail::raw(m), p_);
    const auto i = static_cast<std::size_t>(residue.convert_to<unsigned long>());
    BigInt r = m * q_[i] + k_[i];
    mpz_divexact_ui(detail::raw(r), detail::raw(r), p_);
    return r;
  }

 private:
  std::uint32_t p_;
  std::vector<std::int64_t> q_;
  std::vector<std::int64_t> k_;
};

inline BigInt generalized_step(const GeneralizedMap& map, const BigInt& m) { return map.step(m); }

// ---------------------------------------------------------------------------

struct OrbitOptions {
  std::uint64_t max_steps = kDefaultStepBudget;
  bool stop_at_one = true;
  bool trace = false;
};

struct OrbitRecord {
  BigInt start;
  MapKind map_kind = MapKind::T;
  std::uint64_t steps_taken = 0;
  bool reached_one = false;
  std::optional<std::uint64_t> tau;
  BigInt max_value;
  std::optional<std::uint64_t> parity_ones;  // T-orbits only
  std::vector<BigInt> trace;                 // iterates 0..steps_taken when requested
};

inline OrbitRecord orbit(MapKind kind, const BigInt& m, const OrbitOptions& opts = {}) {
  if (kind == MapKind::Generalized) {
    throw PreconditionError("orbit: generalized maps need a GeneralizedMap argument");
  }
  if (sign(m) <= 0) throw PreconditionError("orbit: m must be >= 1");
  if (kind == MapKind::Syracuse && !is_odd(m)) {
    throw PreconditionError("orbit: the Syracuse map needs an odd starting value");
  }

  OrbitRecord rec;
  rec.start = m;
  rec.map_kind = kind;
  OrbitValue x(m);
  OrbitValue best = x;
  std::uint64_t ones = 0;
  if (opts.trace) rec.trace.push_back(m);
  if (x.is_one()) rec.tau = 0;

  std::uint64_t n = 0;
  while (n < opts.max_steps && !(opts.stop_at_one && rec.tau)) {
    switch (kind) {
      case MapKind::T:
        ones += x.odd() ? 1 : 0;
        x.t_step();
        break;
      case MapKind::C: x.col_step(); break;
      case MapKind::Syracuse: x.syracuse_step(); break;
      case MapKind::Generalized: break;
    }
    ++n;
    if (best < x) best = x;
    if (opts.trace) rec.trace.push_back(x.value());
    if (!rec.tau && x.is_one()) rec.tau = n;
  }

  rec.steps_taken = n;
  rec.reached_one = rec.tau.has_value();
  rec.max_value = best.value();
  if (kind == MapKind::T) rec.parity_ones = ones;
  return rec;
}

inline OrbitRecord orbit(const GeneralizedMap& map, const BigInt& m, const OrbitOptions& opts = {}) {
  OrbitRecord rec;
  rec.start = m;
  rec.map_kind = MapKind::Generalized;
  rec.max_value = m;
  BigInt x = m;
  if (opts.trace) rec.trace.push_back(x);
  if (x == 1) rec.tau = 0;
  std::uint64_t n = 0;
  while (n < opts.max_steps && !(opts.stop_at_one && rec.tau)) {
    x = map.step(x);
    ++n;
    if (x > rec.max_value) rec.max_value = x;
    if (opts.trace) rec.trace.push_back(x);
    if (!rec.tau && x == 1) rec.tau = n;
  }
  rec.steps_taken = n;
  rec.reached_one = rec.tau.has_value();
  return rec;
}

// ---------------------------------------------------------------------------
// Total stopping time and orbit minimum for T.

inline std::optional<std::uint64_t> tau(const BigInt& m, std::uint64_t budget = kDefaultStepBudget) {
  if (sign(m) <= 0) throw PreconditionError("tau: m must be >= 1");
  OrbitValue x(m);
  for (std::uint64_t n = 0;; ++n) {
    if (x.is_one()) return n;
    if (n == budget) return std::nullopt;
    x.t_step();
  }
}

/// Word-sized fast path for scans; identical results to the BigInt overload.
inline std::optional<std::uint64_t> tau(std::uint64_t m, std::uint64_t budget = kDefaultStepBudget) {
  if (m == 0) throw PreconditionError("tau: m must be >= 1");
  std::uint64_t n = 0;
  while (m != 1) {
    if (n == budget) return std::nullopt;
    if (!detail::try_t_step(m)) {
      auto rest = tau(t_step(BigInt(m)), budget - n - 1);
      if (!rest) return std::nullopt;
      return n + 1 + *rest;
    }
    ++n;
  }
  return n;
}

struct TMinResult {
  BigInt value;
  bool exact = false;  // true iff the orbit reached 1 within the budget
};

inline TMinResult t_min(const BigInt& m, std::uint64_t budget = kDefaultStepBudget) {
  if (sign(m) <= 0) throw PreconditionError("t_min: m must be >= 1");
  OrbitValue x(m);
  OrbitValue lo = x;
  for (std::uint64_t n = 0; n < budget && !x.is_one(); ++n) {
    x.t_step();
    if (x < lo) lo = x;
  }
  return {lo.value(), lo.is_one()};
}

}  // namespace collatz_lab
