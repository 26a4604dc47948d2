#pragma once

// Empirical densities of the sets whose members satisfy the orbit bounds
// below, measured exhaustively on [1, N] and per shell [a^n, a^(n+1)).
//
//   MAIN_T            (sqrt3/2)^k m^(1-e) <= T^k(m) <= (sqrt3/2)^k m^(1+e),  0 <= k <= range(m)
//   BEGINNING_T       same bounds,                                           0 <= k <= log2 m
//   SECOND_MAIN_T     MAIN_T and r_k(m) 3^(k/2) m^(-e) < 1,                  0 <= k <= range(m)
//   RKM_BOUND         r_k(m) 3^(k/2) m^(-e) < 1,                             0 <= k <= log2 m
//   PARITY_WINDOW     -e k < S_k - k/2 < e k,                 floor(a log2 m) <= k <= floor(log2 m)
//   PARITY_BAND       -e log2 m <= S_k - k/2 <= e log2 m,                    0 <= k <= range(m)
//   REFORM_LAMBDA     m^(l-e) <= T^j(m) <= m^(l+e),  j = floor((1-l) range(m))
//   UPPER_BOUND       T^j(m) <= m^e,                 j = floor(range(m))
//   COL_VARIANT       (3/4)^(k/3) m^(1-e) <= C^k(m) <= (3/4)^(k/3) m^(1+e),  0 <= k <= 3 log2 m / (2 - log2 3)
//   SYRACUSE_VARIANT  (3/4)^k m^(1-e) <= Syr^k(m) <= (3/4)^k m^(1+e),        0 <= k <= log2 m / log2(4/3)
//
// with range(m) = log2 m / (1 - log2 sqrt3) and S_k = p_0 + ... + p_{k-1}.
// Every k-range endpoint is floored; all comparisons are exact (see
// log_compare.hpp).

#include "collatz_lab/closed_form.hpp"
#include "collatz_lab/log_compare.hpp"
#include "collatz_lab/maps.hpp"
#include "collatz_lab/natural.hpp"
#include "collatz_lab/parallel.hpp"
#include "collatz_lab/rational.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace collatz_lab {

enum class Family {
  MainT,
  ReformLambda,
  ParityBand,
  RkmBound,
  ParityWindow,
  ColVariant,
  SyracuseVariant,
  BeginningT,
  SecondMainT,
  UpperBound,
};

inline constexpr std::array<std::pair<Family, std::string_view>, 10> kFamilyNames{{
    {Family::MainT, "MAIN_T"},
    {Family::ReformLambda, "REFORM_LAMBDA"},
    {Family::ParityBand, "PARITY_BAND"},
    {Family::RkmBound, "RKM_BOUND"},
    {Family::ParityWindow, "PARITY_WINDOW"},
    {Family::ColVariant, "COL_VARIANT"},
    {Family::SyracuseVariant, "SYRACUSE_VARIANT"},
    {Family::BeginningT, "BEGINNING_T"},
    {Family::SecondMainT, "SECOND_MAIN_T"},
    {Family::UpperBound, "UPPER_BOUND"},
}};

inline std::string_view to_string(Family f) {
  for (auto [fam, name] : kFamilyNames) {
    if (fam == f) return name;
  }
  return "?";
}

/// Accepts the canonical names case-insensitively, with '-' for '_'.
inline std::optional<Family> parse_family(std::string_view text) {
  std::string norm;
  for (char ch : text) norm.push_back(ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  for (auto [fam, name] : kFamilyNames) {
    if (name == norm) return fam;
  }
  return std::nullopt;
}

struct PredicateSpec {
  Family family = Family::MainT;
  ExactRational epsilon = ExactRational(ExactRational::parse("0.1"));
  std::optional<ExactRational> lambda;  // REFORM_LAMBDA only
  std::optional<ExactRational> alpha;   // PARITY_WINDOW only

  void validate() const {
    if (epsilon.sign() <= 0) throw PreconditionError("epsilon must be > 0");
    if (family == Family::ReformLambda) {
      if (!lambda) throw PreconditionError("REFORM_LAMBDA needs lambda");
      if (*lambda < ExactRational(0) || *lambda > ExactRational(1)) throw PreconditionError("lambda must lie in [0,1]");
    }
    if (family == Family::ParityWindow) {
      if (!alpha) throw PreconditionError("PARITY_WINDOW needs alpha");
      if (alpha->sign() <= 0 || *alpha > ExactRational(1)) throw PreconditionError("alpha must lie in (0,1]");
    }
  }

  std::string label() const {
    std::string s(to_string(family));
    s += " eps=" + epsilon.str();
    if (family == Family::ReformLambda && lambda) s += " lambda=" + lambda->str();
    if (family == Family::ParityWindow && alpha) s += " alpha=" + alpha->str();
    return s;
  }
};

// ---------------------------------------------------------------------------
// Membership

namespace detail {

// Sign of a quantity whose double estimate is `value`, with `magnitude` the
// sum of absolute contributions; escalates to the exact form when unclear.
template <class MakeForm>
int decide_sign(double value, double magnitude, MakeForm&& make_form) {
  if (std::fabs(value) > magnitude * 0x1p-40 + 1e-300) return value > 0 ? 1 : -1;
  return make_form().sign();
}

inline LogLinearForm ln_of(const BigInt& x, const ExactRational& c = ExactRational(1)) {
  LogLinearForm f;
  f.add(c, x);
  return f;
}

// d_k = 3^{S_k} 2^k r_k(m), kept exact: d <- 3d + 2^k after an odd step k.
class RemainderNumerator {
 public:
  void odd_step(unsigned k) {
    if (!big_ && detail_step(small_, k)) return;
    if (!big_) big_ = to_big(small_);
    *big_ = 3 * *big_ + pow2(k);
  }
  bool is_zero() const { return !big_ && small_ == 0; }
  double log() const { return big_ ? ln(*big_) : std::log(static_cast<long double>(small_)); }
  BigInt value() const { return big_ ? *big_ : to_big(small_); }

 private:
  static bool detail_step(u128& d, unsigned k) {
    u128 t;
    if (k >= 127 || __builtin_mul_overflow(d, static_cast<u128>(3), &t)) return false;
    return !__builtin_add_overflow(t, static_cast<u128>(1) << k, &d);
  }
  u128 small_ = 0;
  std::optional<BigInt> big_;
};

// Per-step geometric factor of the bound: ln(base) = two * ln 2 + three * ln 3.
struct Geometric {
  ExactRational two;
  ExactRational three;
  double ln_base;
};

inline Geometric geometric_for(Family f) {
  switch (f) {
    case Family::ColVariant:  // cube root of 3/4
      return {ExactRational(BigInt(-2), BigInt(3)), ExactRational(BigInt(1), BigInt(3)), (kLn3 - 2 * kLn2) / 3};
    case Family::SyracuseVariant:  // 3/4
      return {ExactRational(-2), ExactRational(1), kLn3 - 2 * kLn2};
    default:  // sqrt(3)/2
      return {ExactRational(-1), ExactRational(BigInt(1), BigInt(2)), kLn3 / 2 - kLn2};
  }
}

class MemberEvaluator {
 public:
  MemberEvaluator(const PredicateSpec& spec, OrbitValue start)
      : spec_(spec), start_(std::move(start)), ln_m_(start_.log()), eps_(spec.epsilon.to_double()) {}

  bool run() {
    switch (spec_.family) {
      case Family::MainT:
      case Family::ColVariant:
      case Family::SyracuseVariant:
      case Family::BeginningT:
      case Family::SecondMainT:
        return geometric();
      case Family::RkmBound: return rkm_only();
      case Family::ParityBand: return parity_band();
      case Family::ParityWindow: return parity_window();
      case Family::ReformLambda: return reform();
      case Family::UpperBound: return upper_bound();
    }
    return false;
  }

 private:
  const BigInt& m() {
    if (!m_big_) m_big_ = start_.value();
    return *m_big_;
  }
  std::int64_t floor_log2_m() const { return static_cast<std::int64_t>(start_.bits()) - 1; }

  // floor(coeff * ln m / unit) where unit = two * ln 2 + three * ln 3 > 0.
  std::int64_t floor_range(const ExactRational& coeff, const ExactRational& two, const ExactRational& three) {
    const double unit = two.to_double() * kLn2 + three.to_double() * kLn3;
    return floor_quotient(
        coeff.to_double() * ln_m_, unit, [&] { return ln_of(m(), coeff); },
        [&] {
          LogLinearForm u;
          u.add(two, BigInt(2));
          u.add(three, BigInt(3));
          return u;
        });
  }
  std::int64_t main_range() {
    return floor_range(ExactRational(1), ExactRational(1), ExactRational(BigInt(-1), BigInt(2)));
  }

  // (base)^k m^(1-e) <= v <= (base)^k m^(1+e)
  bool within_geometric(const OrbitValue& v, std::int64_t k, const Geometric& g) {
    const double lv = v.log();
    const double kg = static_cast<double>(k) * g.ln_base;
    const double lo = 1 - eps_, hi = 1 + eps_;
    const double mag = std::fabs(lv) + std::fabs(kg) + (1 + eps_) * ln_m_;
    auto bound_form = [&](const ExactRational& exponent, int dir) {
      // dir * (ln v - k ln base - exponent ln m)
      LogLinearForm f;
      const ExactRational d(dir);
      f.add(d, v.value());
      f.add(-d * ExactRational(k) * g.two, BigInt(2));
      f.add(-d * ExactRational(k) * g.three, BigInt(3));
      f.add(-d * exponent, m());
      return f;
    };
    if (decide_sign(lv - kg - lo * ln_m_, mag, [&] { return bound_form(ExactRational(1) - spec_.epsilon, 1); }) < 0) {
      return false;
    }
    return decide_sign(hi * ln_m_ + kg - lv, mag, [&] { return bound_form(ExactRational(1) + spec_.epsilon, -1); }) >= 0;
  }

  // r_k 3^(k/2) m^(-e) < 1 with r_k = d / (3^S 2^k)
  bool rkm_holds(const RemainderNumerator& d, std::int64_t k, std::int64_t ones) {
    if (d.is_zero()) return true;
    const double val = d.log() + (static_cast<double>(k) / 2 - static_cast<double>(ones)) * kLn3 -
                       static_cast<double>(k) * kLn2 - eps_ * ln_m_;
    const double mag = d.log() + (static_cast<double>(k) / 2 + static_cast<double>(ones)) * kLn3 +
                       static_cast<double>(k) * kLn2 + eps_ * ln_m_;
    return decide_sign(val, mag, [&] {
             LogLinearForm f;
             f.add(ExactRational(1), d.value());
             f.add(ExactRational(BigInt(k), BigInt(2)) - ExactRational(ones), BigInt(3));
             f.add(ExactRational(-k), BigInt(2));
             f.add(-spec_.epsilon, m());
             return f;
           }) < 0;
  }

  void step(OrbitValue& v) {
    switch (spec_.family) {
      case Family::ColVariant: v.col_step(); break;
      case Family::SyracuseVariant: v.syracuse_step(); break;
      default: v.t_step(); break;
    }
  }

  bool geometric() {
    const Family f = spec_.family;
    if (f == Family::SyracuseVariant && !start_.odd()) {
      throw PreconditionError("SYRACUSE_VARIANT membership needs an odd m");
    }
    std::int64_t k_max = 0;
    switch (f) {
      case Family::BeginningT: k_max = floor_log2_m(); break;
      case Family::ColVariant: k_max = floor_range(ExactRational(3), ExactRational(2), ExactRational(-1)); break;
      case Family::SyracuseVariant: k_max = floor_range(ExactRational(1), ExactRational(2), ExactRational(-1)); break;
      default: k_max = main_range(); break;
    }
    const Geometric g = geometric_for(f);
    const bool with_rkm = f == Family::SecondMainT;
    OrbitValue v = start_;
    RemainderNumerator d;
    std::int64_t ones = 0;
    for (std::int64_t k = 0;; ++k) {
      if (!within_geometric(v, k, g)) return false;
      if (with_rkm && !rkm_holds(d, k, ones)) return false;
      if (k == k_max) return true;
      if (with_rkm && v.odd()) {
        d.odd_step(static_cast<unsigned>(k));
        ++ones;
      }
      step(v);
    }
  }

  bool rkm_only() {
    const std::int64_t k_max = floor_log2_m();
    OrbitValue v = start_;
    RemainderNumerator d;
    std::int64_t ones = 0;
    for (std::int64_t k = 0;; ++k) {
      if (!rkm_holds(d, k, ones)) return false;
      if (k == k_max) return true;
      if (v.odd()) {
        d.odd_step(static_cast<unsigned>(k));
        ++ones;
      }
      v.t_step();
    }
  }

  bool parity_band() {
    const std::int64_t k_max = main_range();
    OrbitValue v = start_;
    std::int64_t ones = 0;
    for (std::int64_t k = 0;; ++k) {
      // e ln m - |S_k - k/2| ln 2 >= 0
      const std::int64_t twice_dev = std::abs(2 * ones - k);
      const double val = eps_ * ln_m_ - static_cast<double>(twice_dev) / 2 * kLn2;
      const double mag = eps_ * ln_m_ + static_cast<double>(twice_dev) / 2 * kLn2;
      if (decide_sign(val, mag, [&] {
            LogLinearForm f = ln_of(m(), spec_.epsilon);
            f.add(ExactRational(BigInt(-twice_dev), BigInt(2)), BigInt(2));
            return f;
          }) < 0) {
        return false;
      }
      if (k == k_max) return true;
      ones += v.odd() ? 1 : 0;
      v.t_step();
    }
  }

  bool parity_window() {
    const std::int64_t k_hi = floor_log2_m();
    const std::int64_t k_lo = floor_range(*spec_.alpha, ExactRational(1), ExactRational(0));
    const BigInt num = spec_.epsilon.numerator();
    const BigInt den = spec_.epsilon.denominator();
    OrbitValue v = start_;
    std::int64_t ones = 0;
    for (std::int64_t k = 0; k <= k_hi; ++k) {
      // |2 S_k - k| < 2 e k, exactly
      if (k >= k_lo && !(BigInt(std::abs(2 * ones - k)) * den < 2 * num * k)) return false;
      ones += v.odd() ? 1 : 0;
      v.t_step();
    }
    return true;
  }

  std::int64_t advance_t(OrbitValue& v, std::int64_t steps) {
    for (std::int64_t i = 0; i < steps; ++i) v.t_step();
    return steps;
  }

  // lo_exp * ln m <= ln v <= hi_exp * ln m  (either side optional)
  bool log_bracket(const OrbitValue& v, const std::optional<ExactRational>& lo_exp,
                   const std::optional<ExactRational>& hi_exp) {
    const double lv = v.log();
    if (lo_exp) {
      const double e = lo_exp->to_double();
      if (decide_sign(lv - e * ln_m_, std::fabs(lv) + std::fabs(e) * ln_m_, [&] {
            LogLinearForm f = ln_of(v.value());
            f.add(-*lo_exp, m());
            return f;
          }) < 0) {
        return false;
      }
    }
    if (hi_exp) {
      const double e = hi_exp->to_double();
      if (decide_sign(e * ln_m_ - lv, std::fabs(lv) + std::fabs(e) * ln_m_, [&] {
            LogLinearForm f = ln_of(m(), *hi_exp);
            f.add(ExactRational(-1), v.value());
            return f;
          }) < 0) {
        return false;
      }
    }
    return true;
  }

  bool reform() {
    const ExactRational& lambda = *spec_.lambda;
    const std::int64_t j =
        floor_range(ExactRational(1) - lambda, ExactRational(1), ExactRational(BigInt(-1), BigInt(2)));
    OrbitValue v = start_;
    advance_t(v, j);
    return log_bracket(v, lambda - spec_.epsilon, lambda + spec_.epsilon);
  }

  bool upper_bound() {
    OrbitValue v = start_;
    advance_t(v, main_range());
    return log_bracket(v, std::nullopt, spec_.epsilon);
  }

  const PredicateSpec& spec_;
  OrbitValue start_;
  std::optional<BigInt> m_big_;
  double ln_m_;
  double eps_;
};

}  // namespace detail

inline bool member(const PredicateSpec& spec, const BigInt& m) {
  if (sign(m) <= 0) throw PreconditionError("member: m must be >= 1");
  return detail::MemberEvaluator(spec, OrbitValue(m)).run();
}

inline bool member(const PredicateSpec& spec, std::uint64_t m) {
  if (m == 0) throw PreconditionError("member: m must be >= 1");
  return detail::MemberEvaluator(spec, OrbitValue(m)).run();
}

// ---------------------------------------------------------------------------
// Shell scans

struct Shell {
  unsigned n = 0;
  std::uint64_t lo = 0;  // inclusive
  std::uint64_t hi = 0;  // exclusive
  std::uint64_t members = 0;
  std::uint64_t total = 0;
  double fraction = 0;
};

struct CumulativePoint {
  std::uint64_t N = 0;
  std::uint64_t members = 0;
  double fraction = 0;
};

struct DensityReport {
  std::string label;
  std::optional<PredicateSpec> predicate;
  double shell_base = 2;
  std::uint64_t n_max = 0;
  std::vector<Shell> shells;
  std::vector<CumulativePoint> cumulative;
  bool exact = true;  // false when any shell was sampled
};

struct ScanOptions {
  unsigned threads = 0;
  std::optional<std::uint64_t> samples_per_shell;  // sampling mode when set
  std::uint64_t seed = 0x5eed'c011'a72bULL;
  std::uint64_t chunk_size = 1u << 15;
};

/// Integer shell boundaries ceil(a^n) for n = 0, 1, ... up to past n_max + 1;
/// repeated boundaries (bases close to 1) are dropped.
inline std::vector<std::pair<unsigned, std::uint64_t>> shell_boundaries(double base, std::uint64_t n_max) {
  if (!(base > 1)) throw PreconditionError("shell base must be > 1");
  std::vector<std::pair<unsigned, std::uint64_t>> out;
  const bool integral = base == std::floor(base) && base < 4294967296.0;
  const auto ib = static_cast<std::uint64_t>(base);
  std::uint64_t pow_int = 1;
  for (unsigned n = 0;; ++n) {
    std::uint64_t lo;
    if (integral) {
      lo = pow_int;
    } else {
      long double v = std::ceil(std::pow(static_cast<long double>(base), static_cast<long double>(n)));
      lo = v > 1.8e19L ? ~std::uint64_t{0} : static_cast<std::uint64_t>(v);
    }
    if (out.empty() || lo > out.back().second) out.emplace_back(n, lo);
    if (lo > n_max) break;
    if (integral) {
      if (__builtin_mul_overflow(pow_int, ib, &pow_int)) {
        out.emplace_back(n + 1, ~std::uint64_t{0});
        break;
      }
    }
  }
  return out;
}

namespace detail {
inline void finish_report(DensityReport& rep) {
  std::uint64_t members = 0;
  long double est = 0;
  for (auto& s : rep.shells) {
    s.fraction = s.total == 0 ? 0.0 : static_cast<double>(s.members) / static_cast<double>(s.total);
    const std::uint64_t width = s.hi - s.lo;
    if (rep.exact) {
      members += s.members;
    } else {
      est += static_cast<long double>(s.fraction) * width;
      members = static_cast<std::uint64_t>(std::llround(est));
    }
    const std::uint64_t N = s.hi - 1;
    rep.cumulative.push_back({N, members, static_cast<double>(members) / static_cast<double>(N)});
  }
}
}  // namespace detail

/// Density of {m <= n_max : pred(m)} per shell [a^n, a^(n+1)) and cumulatively.
/// pred is called as pred(std::uint64_t m) and must be thread-safe.
template <class Pred>
  requires std::predicate<Pred&, std::uint64_t>
DensityReport measure_density(Pred&& pred, std::uint64_t n_max, double shell_base, const ScanOptions& opts = {},
                              std::string label = {}) {
  if (!(shell_base > 1)) throw PreconditionError("shell base must be > 1");
  if (static_cast<double>(n_max) < shell_base) throw PreconditionError("n_max must be >= shell base");
  DensityReport rep;
  rep.label = std::move(label);
  rep.shell_base = shell_base;
  rep.n_max = n_max;

  const auto bounds = shell_boundaries(shell_base, n_max);
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    const std::uint64_t lo = bounds[i].second;
    const std::uint64_t hi = std::min(bounds[i + 1].second, n_max + 1);
    if (lo >= hi) continue;
    rep.shells.push_back({bounds[i].first, lo, hi, 0, hi - lo, 0});
  }

  const bool sample = opts.samples_per_shell.has_value();
  if (!sample) {
    const auto chunks = make_chunks(1, n_max + 1, opts.chunk_size);
    using Counts = std::vector<std::uint64_t>;
    Counts zero(rep.shells.size(), 0);
    Counts total = map_reduce_chunks(
        chunks, opts.threads, zero,
        [&](const Chunk& c) {
          Counts counts(rep.shells.size(), 0);
          std::size_t s = 0;
          while (rep.shells[s].hi <= c.begin) ++s;
          for (std::uint64_t m = c.begin; m < c.end; ++m) {
            if (m >= rep.shells[s].hi) ++s;
            if (pred(m)) ++counts[s];
          }
          return counts;
        },
        [](Counts& acc, const Counts& part) {
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += part[i];
        });
    for (std::size_t i = 0; i < rep.shells.size(); ++i) rep.shells[i].members = total[i];
  } else {
    for (auto& s : rep.shells) {
      std::vector<std::uint64_t> points;
      if (s.total <= *opts.samples_per_shell) {
        for (std::uint64_t m = s.lo; m < s.hi; ++m) points.push_back(m);
      } else {
        rep.exact = false;
        std::mt19937_64 rng(opts.seed ^ (0x9e3779b97f4a7c15ULL * (s.n + 1)));
        std::uniform_int_distribution<std::uint64_t> dist(s.lo, s.hi - 1);
        points.resize(*opts.samples_per_shell);
        for (auto& p : points) p = dist(rng);
      }
      const auto chunks = make_chunks(0, points.size(), opts.chunk_size);
      s.members = map_reduce_chunks(
          chunks, opts.threads, std::uint64_t{0},
          [&](const Chunk& c) {
            std::uint64_t k = 0;
            for (std::uint64_t i = c.begin; i < c.end; ++i) k += pred(points[i]) ? 1 : 0;
            return k;
          },
          [](std::uint64_t& acc, std::uint64_t part) { acc += part; });
      s.total = points.size();
    }
  }
  detail::finish_report(rep);
  return rep;
}

inline DensityReport measure_density(const PredicateSpec& spec, std::uint64_t n_max, double shell_base,
                                     const ScanOptions& opts = {}) {
  spec.validate();
  DensityReport rep;
  if (spec.family == Family::SyracuseVariant) {
    // Odd integers only; even m are counted as outside the ambient set.
    rep = measure_density([&](std::uint64_t m) { return (m & 1u) != 0 && member(spec, m); }, n_max, shell_base, opts,
                          spec.label());
  } else {
    rep = measure_density([&](std::uint64_t m) { return member(spec, m); }, n_max, shell_base, opts, spec.label());
  }
  rep.predicate = spec;
  return rep;
}

// ---------------------------------------------------------------------------
// Star-density fit: complement ~ C / N^D

class FitUndefinedError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct StarFit {
  double C = 0;
  double D = 0;
  double residual = 0;  // RMS of the log-log fit
  std::size_t shells_used = 0;
};

/// Least squares through (ln N, ln(1 - fraction)) at shell right endpoints
/// N = hi, using only shells whose complement lies strictly in (0, 1).
inline StarFit fit_star_density(std::span<const Shell> shells) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : shells) {
    const double comp = 1.0 - s.fraction;
    if (comp > 0 && comp < 1) pts.emplace_back(std::log(static_cast<double>(s.hi)), std::log(comp));
  }
  if (pts.size() < 3) {
    throw FitUndefinedError("star-density fit needs at least 3 shells with complement in (0,1), got " +
                            std::to_string(pts.size()));
  }
  const double n = static_cast<double>(pts.size());
  double sx = 0, sy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0) throw FitUndefinedError("star-density fit: all shells share one endpoint");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss = 0;
  for (auto [x, y] : pts) {
    const double r = y - (intercept + slope * x);
    ss += r * r;
  }
  return {std::exp(intercept), -slope, std::sqrt(ss / n), pts.size()};
}

inline StarFit fit_star_density(const DensityReport& rep) { return fit_star_density(std::span<const Shell>(rep.shells)); }

// ---------------------------------------------------------------------------
// Concentration of the first N parities on an interval

struct HoeffdingResult {
  std::uint64_t a = 0, b = 0, N = 0;
  ExactRational epsilon;
  std::uint64_t deviating = 0;  // #{m in [a,b) : |S_N(m) - N/2| >= e N}
  std::uint64_t total = 0;
  double empirical = 0;
  double bound = 0;  // 4 exp(-2 e^2 N)
  bool pass = false;
  bool degenerate = false;  // N == 0: every m deviates trivially
};

inline unsigned ceil_log2(std::uint64_t x) { return x <= 1 ? 0 : static_cast<unsigned>(bit_length(x - 1)); }

inline HoeffdingResult hoeffding_check(std::uint64_t a, std::uint64_t b, std::uint64_t N, const ExactRational& epsilon,
                                       unsigned threads = 0) {
  if (a < 1 || a >= b) throw PreconditionError("hoeffding: need 1 <= a < b");
  if (epsilon.sign() <= 0) throw PreconditionError("hoeffding: epsilon must be > 0");
  if (N > ceil_log2(b - a)) {
    throw PreconditionError("hoeffding: N=" + std::to_string(N) + " exceeds ceil(log2(b-a))=" +
                            std::to_string(ceil_log2(b - a)));
  }
  HoeffdingResult res;
  res.a = a;
  res.b = b;
  res.N = N;
  res.epsilon = epsilon;
  res.total = b - a;
  res.degenerate = N == 0;
  // |2S - N| >= 2 e N  <=>  |2S - N| den >= 2 num N
  const BigInt rhs_big = 2 * epsilon.numerator() * N;
  const BigInt den = epsilon.denominator();
  const auto chunks = make_chunks(a, b, 1u << 14);
  res.deviating = map_reduce_chunks(
      chunks, threads, std::uint64_t{0},
      [&](const Chunk& c) {
        std::uint64_t k = 0;
        for (std::uint64_t m = c.begin; m < c.end; ++m) {
          OrbitValue v(m);
          std::int64_t ones = 0;
          for (std::uint64_t i = 0; i < N; ++i) {
            ones += v.odd() ? 1 : 0;
            v.t_step();
          }
          const std::int64_t dev = std::abs(2 * ones - static_cast<std::int64_t>(N));
          if (BigInt(dev) * den >= rhs_big) ++k;
        }
        return k;
      },
      [](std::uint64_t& acc, std::uint64_t part) { acc += part; });
  const long double eps = epsilon.to_double();
  const long double bound = 4.0L * std::exp(-2.0L * eps * eps * static_cast<long double>(N));
  res.empirical = static_cast<double>(res.deviating) / static_cast<double>(res.total);
  res.bound = static_cast<double>(bound);
  res.pass = static_cast<long double>(res.deviating) <= bound * static_cast<long double>(res.total);
  return res;
}

// ---------------------------------------------------------------------------
// T at the index floor((1-l) range(m)) against m^(l +- e)

struct ReformPoint {
  ExactRational lambda;
  std::int64_t index = 0;
  BigInt iterate;
  double lower = 0;  // m^(l-e)
  double upper = 0;  // m^(l+e)
  bool within = false;
};

inline std::vector<ReformPoint> reform_profile(const BigInt& m, std::span<const ExactRational> lambdas,
                                               const ExactRational& epsilon) {
  if (m < 2) throw PreconditionError("reform_profile: m must be >= 2");
  std::vector<ReformPoint> out;
  const double lm = ln(m);
  for (const auto& lambda : lambdas) {
    PredicateSpec spec{Family::ReformLambda, epsilon, lambda, std::nullopt};
    spec.validate();
    ReformPoint p;
    p.lambda = lambda;
    const ExactRational coeff = ExactRational(1) - lambda;
    p.index = floor_quotient(
        coeff.to_double() * lm, kLn2 - kLn3 / 2, [&] { return detail::ln_of(m, coeff); },
        [] {
          LogLinearForm u;
          u.add(ExactRational(1), BigInt(2));
          u.add(ExactRational(BigInt(-1), BigInt(2)), BigInt(3));
          return u;
        });
    BigInt v = m;
    for (std::int64_t i = 0; i < p.index; ++i) v = t_step(v);
    p.iterate = v;
    p.lower = std::exp((lambda - epsilon).to_double() * lm);
    p.upper = std::exp((lambda + epsilon).to_double() * lm);
    p.within = member(spec, m);
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_fraction(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12f", f);
  return buf;
}

inline void write_shells_csv(std::ostream& os, const DensityReport& rep) {
  if (!rep.exact) os << "# sampled shells: counts are over samples, not exhaustive\n";
  os << "shell_n,lo,hi,members,total,fraction\n";
  for (const auto& s : rep.shells) {
    os << s.n << ',' << s.lo << ',' << s.hi << ',' << s.members << ',' << s.total << ',' << format_fraction(s.fraction)
       << '\n';
  }
}

inline void write_cumulative_csv(std::ostream& os, const DensityReport& rep) {
  if (!rep.exact) os << "# sampled shells: members are estimates\n";
  os << "N,members,fraction\n";
  for (const auto& c : rep.cumulative) os << c.N << ',' << c.members << ',' << format_fraction(c.fraction) << '\n';
}

inline nlohmann::ordered_json to_json(const StarFit& fit) {
  return {{"C", fit.C}, {"D", fit.D}, {"residual", fit.residual}};
}

inline nlohmann::ordered_json to_json(const DensityReport& rep) {
  nlohmann::ordered_json j;
  j["label"] = rep.label;
  j["shell_base"] = rep.shell_base;
  j["n_max"] = rep.n_max;
  j["exact"] = rep.exact;
  auto& shells = j["shells"] = nlohmann::ordered_json::array();
  for (const auto& s : rep.shells) {
    shells.push_back({{"shell_n", s.n}, {"lo", s.lo}, {"hi", s.hi}, {"members", s.members}, {"total", s.total},
                      {"fraction", s.fraction}});
  }
  auto& cum = j["cumulative"] = nlohmann::ordered_json::array();
  for (const auto& c : rep.cumulative) cum.push_back({{"N", c.N}, {"members", c.members}, {"fraction", c.fraction}});
  return j;
}

/// Reads the shell CSV written by write_shells_csv ('#' lines ignored).
inline std::vector<Shell> read_shells_csv(std::istream& is) {
  std::vector<Shell> out;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("shell_n,lo,hi,members,total,fraction", 0) != 0) {
        throw PreconditionError("shell CSV: unexpected header '" + line + "'");
      }
      header = true;
      continue;
    }
    Shell s;
    unsigned long long lo = 0, hi = 0, mem = 0, tot = 0;
    double frac = 0;
    if (std::sscanf(line.c_str(), "%u,%llu,%llu,%llu,%llu,%lf", &s.n, &lo, &hi, &mem, &tot, &frac) != 6) {
      throw PreconditionError("shell CSV: malformed row '" + line + "'");
    }
    s.lo = lo;
    s.hi = hi;
    s.members = mem;
    s.total = tot;
    s.fraction = frac;
    out.push_back(s);
  }
  if (!header) throw PreconditionError("shell CSV: missing header");
  return out;
}

}  // namespace collatz_lab
