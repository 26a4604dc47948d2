#pragma once

// Throughput of table-driven advancement against one T-step at a time on
// arbitrary-precision orbits. Both sides run the same segments and must
// land on the same values.

#include "collatz_lab/natural.hpp"
#include "collatz_lab/step_table.hpp"

#include <chrono>
#include <cstdint>
#include <random>
#include <vector>

namespace collatz_lab {

struct ThroughputReport {
  unsigned window = 0;
  std::uint64_t steps = 0;  // T-steps per method
  double single_seconds = 0;
  double batch_seconds = 0;
  double single_rate = 0;  // steps per second
  double batch_rate = 0;
  double speedup = 0;
  bool results_match = false;
};

namespace detail {

inline void t_step_in_place(BigInt& m) {
  mpz_ptr z = raw(m);
  if (mpz_odd_p(z)) {
    mpz_mul_ui(z, z, 3);
    mpz_add_ui(z, z, 1);
  }
  mpz_fdiv_q_2exp(z, z, 1);
}

// Odd starting values of 512..4096 bits, cycling through the sizes.
inline std::vector<BigInt> bench_starts(std::size_t count, std::uint64_t seed) {
  static constexpr unsigned kBits[] = {512, 1024, 2048, 4096};
  std::mt19937_64 rng(seed);
  std::vector<BigInt> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned bits = kBits[i % 4];
    BigInt v(1);
    for (unsigned b = 64; b < bits; b += 64) v = (v << 64) | BigInt(rng());
    v = (v << 1) | 1;
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// Runs about `steps` T-steps of mixed orbits each way. Each segment starts
/// from a fresh value and runs a multiple of the window (about 2048 steps),
/// so orbits stay large and both methods do identical work.
inline ThroughputReport table_bench(const StepTable& table, std::uint64_t steps, std::uint64_t seed = 1) {
  const unsigned n = table.window();
  const std::uint64_t per_segment = n * ((2048 + n - 1) / n);
  const std::uint64_t segments = std::max<std::uint64_t>(1, (steps + per_segment - 1) / per_segment);
  const auto starts = detail::bench_starts(segments, seed);

  using Clock = std::chrono::steady_clock;
  std::vector<BigInt> single(starts), batch(starts);

  const auto t0 = Clock::now();
  for (auto& v : single) {
    for (std::uint64_t i = 0; i < per_segment; ++i) detail::t_step_in_place(v);
  }
  const auto t1 = Clock::now();
  const std::uint64_t rounds = per_segment / n;
  for (auto& v : batch) {
    for (std::uint64_t i = 0; i < rounds; ++i) table.advance_in_place(v);
  }
  const auto t2 = Clock::now();

  ThroughputReport r;
  r.window = n;
  r.steps = segments * per_segment;
  r.single_seconds = std::chrono::duration<double>(t1 - t0).count();
  r.batch_seconds = std::chrono::duration<double>(t2 - t1).count();
  r.single_rate = static_cast<double>(r.steps) / r.single_seconds;
  r.batch_rate = static_cast<double>(r.steps) / r.batch_seconds;
  r.speedup = r.batch_rate / r.single_rate;
  r.results_match = single == batch;
  return r;
}

}  // namespace collatz_lab
