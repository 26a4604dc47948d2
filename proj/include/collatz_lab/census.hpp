#pragma once

// Exhaustive census of length-n parity vectors over 2^n consecutive
// integers (or over the residues mod 2^n). Uniform means every vector in
// {0,1}^n occurs exactly once.

#include "collatz_lab/maps.hpp"
#include "collatz_lab/natural.hpp"
#include "collatz_lab/parallel.hpp"
#include "collatz_lab/step_table.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <vector>

namespace collatz_lab {

struct CensusReport {
  unsigned n = 0;
  std::optional<BigInt> interval_start;  // absent for the residue census
  std::vector<std::uint32_t> multiplicity;  // indexed by parity mask, bit i = p_i
  std::uint64_t samples = 0;
  std::uint64_t distinct = 0;
  std::uint32_t min_count = 0;
  std::uint32_t max_count = 0;
  bool uniform = false;
};

namespace detail {

inline std::uint32_t parity_mask(OrbitValue x, unsigned n) {
  std::uint32_t mask = 0;
  for (unsigned i = 0; i < n; ++i) {
    if (x.odd()) mask |= std::uint32_t{1} << i;
    x.t_step();
  }
  return mask;
}

inline CensusReport finish_census(unsigned n, std::vector<std::uint32_t> counts) {
  CensusReport rep;
  rep.n = n;
  rep.multiplicity = std::move(counts);
  auto [lo, hi] = std::minmax_element(rep.multiplicity.begin(), rep.multiplicity.end());
  rep.min_count = *lo;
  rep.max_count = *hi;
  for (auto c : rep.multiplicity) {
    rep.samples += c;
    rep.distinct += c != 0 ? 1 : 0;
  }
  rep.uniform = rep.min_count == 1 && rep.max_count == 1;
  return rep;
}

// counts[mask(first + j)] += 1 for j in [0, 2^n)
template <class MaskOf>
std::vector<std::uint32_t> tally(unsigned n, unsigned threads, MaskOf&& mask_of) {
  std::vector<std::uint32_t> counts(std::size_t{1} << n, 0);
  const auto chunks = make_chunks(0, std::uint64_t{1} << n, 1u << 14);
  for_each_chunk(chunks, threads, [&](const Chunk& c) {
    for (std::uint64_t j = c.begin; j < c.end; ++j) {
      std::atomic_ref<std::uint32_t>(counts[mask_of(j)]).fetch_add(1, std::memory_order_relaxed);
    }
  });
  return counts;
}

}  // namespace detail

/// Census over the residues 0..2^n-1 (representative 2^n for residue 0).
inline CensusReport parity_census(unsigned n, unsigned max_window = kDefaultMaxWindow, unsigned threads = 0) {
  if (n != 0) check_window(n, max_window);
  auto counts = detail::tally(n, threads, [n](std::uint64_t r) {
    return detail::parity_mask(OrbitValue(r == 0 ? (std::uint64_t{1} << n) : r), n);
  });
  return detail::finish_census(n, std::move(counts));
}

/// Census over the interval [start, start + 2^n).
inline CensusReport census_on_interval(const BigInt& start, unsigned n, unsigned max_window = kDefaultMaxWindow,
                                       unsigned threads = 0) {
  if (sign(start) <= 0) throw PreconditionError("census_on_interval: start must be >= 1");
  if (n != 0) check_window(n, max_window);
  std::vector<std::uint32_t> counts;
  const auto small_start = to_u64(start);
  if (small_start && *small_start <= ~std::uint64_t{0} - (std::uint64_t{1} << n)) {
    const std::uint64_t s = *small_start;
    counts = detail::tally(n, threads, [s, n](std::uint64_t j) { return detail::parity_mask(OrbitValue(s + j), n); });
  } else {
    counts = detail::tally(n, threads, [&start, n](std::uint64_t j) {
      return detail::parity_mask(OrbitValue(BigInt(start + j)), n);
    });
  }
  auto rep = detail::finish_census(n, std::move(counts));
  rep.interval_start = start;
  return rep;
}

}  // namespace collatz_lab
