#pragma once

// Total stopping time statistics. tau counts T-steps, not C-steps; every
// CSV written here says so in a leading comment line.

#include "collatz_lab/density.hpp"
#include "collatz_lab/log_compare.hpp"
#include "collatz_lab/maps.hpp"
#include "collatz_lab/natural.hpp"
#include "collatz_lab/parallel.hpp"
#include "collatz_lab/rational.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace collatz_lab {

inline constexpr const char* kTauConvention = "# tau convention: T-steps";

/// tau(m) with the lower bound tau(m) >= floor(log2 m) asserted when resolved.
inline std::optional<std::uint64_t> checked_tau(std::uint64_t m, std::uint64_t budget) {
  auto t = tau(m, budget);
  if (t && *t < bit_length(m) - 1) {
    throw std::logic_error("tau(" + std::to_string(m) + ")=" + std::to_string(*t) + " is below floor(log2 m)");
  }
  return t;
}

struct TauSummary {
  std::uint64_t x = 0;
  std::uint64_t sum_tau = 0;  // over resolved m <= x
  double normalized = 0;      // sum_tau / (x log2 x)
  std::uint64_t unresolved = 0;

  bool exact() const noexcept { return unresolved == 0; }
};

/// Powers of 2 and of 10 in [2, x], plus x itself, ascending.
inline std::vector<std::uint64_t> default_checkpoints(std::uint64_t x) {
  std::set<std::uint64_t> pts{x};
  for (std::uint64_t p = 2; p <= x; p *= 2) {
    pts.insert(p);
    if (p > x / 2) break;
  }
  for (std::uint64_t p = 10; p <= x; p *= 10) {
    pts.insert(p);
    if (p > x / 10) break;
  }
  return {pts.begin(), pts.end()};
}

struct TauScanOptions {
  std::uint64_t budget = kDefaultStepBudget;
  unsigned threads = 0;
  std::uint64_t chunk_size = 1u << 14;
};

/// Summaries at each checkpoint (all must lie in [2, x]; x is always added).
inline std::vector<TauSummary> tau_average_checkpoints(std::uint64_t x, std::vector<std::uint64_t> checkpoints,
                                                       const TauScanOptions& opts = {}) {
  if (x < 2) throw PreconditionError("tau_average: x must be >= 2");
  checkpoints.push_back(x);
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  if (checkpoints.front() < 2 || checkpoints.back() > x) {
    throw PreconditionError("tau_average: checkpoints must lie in [2, x]");
  }

  // Chunks never straddle a checkpoint, so prefix sums fall on chunk ends.
  std::vector<Chunk> chunks;
  std::uint64_t lo = 1;
  for (std::uint64_t cp : checkpoints) {
    for (const auto& c : make_chunks(lo, cp + 1, opts.chunk_size)) chunks.push_back({chunks.size(), c.begin, c.end});
    lo = cp + 1;
  }

  struct Part {
    std::uint64_t sum = 0, unresolved = 0;
  };
  std::vector<Part> parts(chunks.size());
  for_each_chunk(chunks, opts.threads, [&](const Chunk& c) {
    Part p;
    for (std::uint64_t m = c.begin; m < c.end; ++m) {
      if (auto t = checked_tau(m, opts.budget)) {
        p.sum += *t;
      } else {
        ++p.unresolved;
      }
    }
    parts[c.index] = p;
  });

  std::vector<TauSummary> out;
  Part acc;
  std::size_t next = 0;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    acc.sum += parts[i].sum;
    acc.unresolved += parts[i].unresolved;
    if (chunks[i].end == checkpoints[next] + 1) {
      const std::uint64_t cx = checkpoints[next++];
      const double denom = static_cast<double>(cx) * std::log2(static_cast<double>(cx));
      out.push_back({cx, acc.sum, static_cast<double>(acc.sum) / denom, acc.unresolved});
    }
  }
  return out;
}

inline TauSummary tau_average(std::uint64_t x, const TauScanOptions& opts = {}) {
  return tau_average_checkpoints(x, {}, opts).back();
}

inline void write_tau_csv(std::ostream& os, const std::vector<TauSummary>& rows) {
  os << kTauConvention << '\n' << "x,sum_tau,normalized,unresolved\n";
  for (const auto& r : rows) {
    os << r.x << ',' << r.sum_tau << ',' << format_fraction(r.normalized) << ',' << r.unresolved << '\n';
  }
}

/// Density of {m : tau(m) > alpha log2 m}. An orbit that exhausts the budget
/// has tau > budget and is decided against that lower bound.
inline DensityReport tau_exceedance_density(const ExactRational& alpha, std::uint64_t n_max, double shell_base = 2,
                                            const TauScanOptions& opts = {}) {
  if (alpha.sign() < 0) throw PreconditionError("tau_exceedance: alpha must be >= 0");
  const double a = alpha.to_double();
  auto pred = [&](std::uint64_t m) {
    if (m == 1) return false;  // tau(1) = 0 is not > alpha * 0
    const auto t = checked_tau(m, opts.budget);
    const std::uint64_t steps = t ? *t : opts.budget;  // unresolved: tau > budget >= steps
    // tau ln 2 - alpha ln m  (> 0 for members; unresolved members need >= 0)
    const double val = static_cast<double>(steps) * kLn2 - a * ln(m);
    const double mag = static_cast<double>(steps) * kLn2 + a * ln(m);
    const int s = detail::decide_sign(val, mag, [&] {
      LogLinearForm f;
      f.add(ExactRational(static_cast<long>(steps)), BigInt(2));
      f.add(-alpha, BigInt(m));
      return f;
    });
    return t ? s > 0 : s >= 0;
  };
  ScanOptions so;
  so.threads = opts.threads;
  auto rep = measure_density(pred, n_max, shell_base, so, "TAU_EXCEED alpha=" + alpha.str());
  return rep;
}

/// Density of {m : T_min(m) <= m^theta}. The walk stops as soon as an orbit
/// value at or below m^theta is seen; orbits that exhaust the budget first
/// count as non-members.
inline DensityReport tmin_threshold_density(const ExactRational& theta, std::uint64_t n_max, double shell_base = 2,
                                            const TauScanOptions& opts = {}) {
  if (theta.sign() <= 0) throw PreconditionError("tmin_threshold: theta must be > 0");
  const double th = theta.to_double();
  auto pred = [&](std::uint64_t m) {
    const double lm = ln(m);
    OrbitValue v(m);
    for (std::uint64_t n = 0;; ++n) {
      const double lv = v.log();
      // theta ln m - ln v >= 0
      if (detail::decide_sign(th * lm - lv, th * lm + lv, [&] {
            LogLinearForm f;
            f.add(theta, BigInt(m));
            f.add(ExactRational(-1), v.value());
            return f;
          }) >= 0) {
        return true;
      }
      if (v.is_one() || n == opts.budget) return false;
      v.t_step();
    }
  };
  ScanOptions so;
  so.threads = opts.threads;
  return measure_density(pred, n_max, shell_base, so, "TMIN theta=" + theta.str());
}

struct TauHistogram {
  double bucket_width = 0;
  std::vector<std::uint64_t> counts;  // bucket i covers [i w, (i+1) w)
  std::uint64_t unresolved = 0;
};

/// Histogram of tau(m) / log2 m over 2 <= m <= n_max.
inline TauHistogram tau_ratio_histogram(std::uint64_t n_max, double bucket_width, const TauScanOptions& opts = {}) {
  if (n_max < 2) throw PreconditionError("tau_ratio_histogram: n_max must be >= 2");
  if (!(bucket_width > 0)) throw PreconditionError("tau_ratio_histogram: bucket width must be > 0");
  const auto chunks = make_chunks(2, n_max + 1, opts.chunk_size);
  TauHistogram init;
  init.bucket_width = bucket_width;
  return map_reduce_chunks(
      chunks, opts.threads, init,
      [&](const Chunk& c) {
        TauHistogram h;
        for (std::uint64_t m = c.begin; m < c.end; ++m) {
          const auto t = checked_tau(m, opts.budget);
          if (!t) {
            ++h.unresolved;
            continue;
          }
          const double ratio = static_cast<double>(*t) / std::log2(static_cast<double>(m));
          const auto b = static_cast<std::size_t>(std::floor(ratio / bucket_width));
          if (h.counts.size() <= b) h.counts.resize(b + 1, 0);
          ++h.counts[b];
        }
        return h;
      },
      [](TauHistogram& acc, const TauHistogram& part) {
        if (acc.counts.size() < part.counts.size()) acc.counts.resize(part.counts.size(), 0);
        for (std::size_t i = 0; i < part.counts.size(); ++i) acc.counts[i] += part.counts[i];
        acc.unresolved += part.unresolved;
      });
}

inline void write_histogram_csv(std::ostream& os, const TauHistogram& h) {
  os << kTauConvention << '\n' << "bucket_lo,bucket_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    os << format_fraction(static_cast<double>(i) * h.bucket_width) << ','
       << format_fraction(static_cast<double>(i + 1) * h.bucket_width) << ',' << h.counts[i] << '\n';
  }
}

}  // namespace collatz_lab
