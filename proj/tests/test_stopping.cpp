#include "collatz_lab/stopping_stats.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace collatz_lab;

TEST(Stopping, TauAverageSmall) {
  EXPECT_EQ(tau_average(2).sum_tau, 1u);
  std::uint64_t sum = 0;
  for (std::uint64_t m = 1; m <= 10; ++m) sum += oracle::tau(m);
  EXPECT_EQ(sum, 50u);  // 0,1,5,2,4,6,11,3,13,5
  EXPECT_EQ(tau_average(10).sum_tau, sum);
  EXPECT_THROW(tau_average(1), PreconditionError);
}

TEST(Stopping, TauAverageMatchesOracleAtCheckpoints) {
  const auto rows = tau_average_checkpoints(100000, default_checkpoints(100000), {.threads = 3});
  std::uint64_t sum = 0;
  std::size_t next = 0;
  for (std::uint64_t m = 1; m <= 100000; ++m) {
    sum += oracle::tau(m);
    if (next < rows.size() && rows[next].x == m) {
      ASSERT_EQ(rows[next].sum_tau, sum) << m;
      EXPECT_DOUBLE_EQ(rows[next].normalized, static_cast<double>(sum) / (m * std::log2(static_cast<double>(m))));
      ++next;
    }
  }
  EXPECT_EQ(next, rows.size());
  EXPECT_EQ(rows.back().x, 100000u);
}

TEST(Stopping, DefaultCheckpoints) {
  const auto cps = default_checkpoints(1000);
  const std::vector<std::uint64_t> expect{2, 4, 8, 10, 16, 32, 64, 100, 128, 256, 512, 1000};
  EXPECT_EQ(cps, expect);
}

TEST(Stopping, ChunkLayoutDoesNotChangeSums) {
  const auto a = tau_average_checkpoints(50000, {777, 12345}, {.threads = 1, .chunk_size = 1 << 14});
  const auto b = tau_average_checkpoints(50000, {777, 12345}, {.threads = 4, .chunk_size = 97});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].sum_tau, b[i].sum_tau);
  }
}

TEST(Stopping, UnresolvedOrbitsAreCountedNotSummed) {
  const auto r = tau_average(30, {.budget = 20});
  std::uint64_t sum = 0, unresolved = 0;
  for (std::uint64_t m = 1; m <= 30; ++m) {
    const auto t = oracle::tau(m);
    if (t <= 20) {
      sum += t;
    } else {
      ++unresolved;
    }
  }
  EXPECT_EQ(r.sum_tau, sum);
  EXPECT_EQ(r.unresolved, unresolved);
  EXPECT_GT(r.unresolved, 0u);
  EXPECT_FALSE(r.exact());
}

TEST(Stopping, TauCsvLabelsConvention) {
  std::ostringstream os;
  write_tau_csv(os, {tau_average(10)});
  EXPECT_EQ(os.str(), "# tau convention: T-steps\nx,sum_tau,normalized,unresolved\n10,50,1.505149978320,0\n");
}

TEST(Stopping, LowerBoundOnTau) {
  for (std::uint64_t m = 1; m <= 200000; ++m) ASSERT_GE(oracle::tau(m), bit_length(m) - 1);
  for (unsigned j = 0; j < 64; ++j) EXPECT_EQ(checked_tau(std::uint64_t{1} << j, kDefaultStepBudget), j);
}

TEST(Stopping, ExceedanceDensity) {
  const auto zero = tau_exceedance_density(ExactRational(0), 1 << 12);
  EXPECT_EQ(zero.shells[0].members, 0u);  // m = 1: tau 0 is not > 0
  for (std::size_t i = 1; i < zero.shells.size(); ++i) EXPECT_EQ(zero.shells[i].fraction, 1.0);

  double prev_total = 2;
  for (const char* a : {"1", "2", "4", "4.8188", "10"}) {
    const auto rep = tau_exceedance_density(ExactRational::parse(a), 1 << 16);
    const double f = rep.cumulative.back().fraction;
    EXPECT_LE(f, prev_total) << a;
    prev_total = f;
    // direct count
    std::uint64_t direct = 0;
    const double alpha = ExactRational::parse(a).to_double();
    for (std::uint64_t m = 2; m <= (1 << 16); ++m) {
      direct += static_cast<double>(oracle::tau(m)) > alpha * std::log2(static_cast<double>(m)) ? 1 : 0;
    }
    EXPECT_EQ(rep.cumulative.back().members, direct) << a;
  }
  EXPECT_LT(prev_total, 0.5);  // alpha = 10
}

TEST(Stopping, ExceedanceExactAtPowersOfTwo) {
  // tau(2^j) = j, so alpha = 1 is a tie there: 2^j is not a member.
  for (unsigned j = 1; j <= 10; ++j) {
    const auto single = tau_exceedance_density(ExactRational(1), std::uint64_t{1} << j);
    EXPECT_EQ(single.shells.back().lo, std::uint64_t{1} << j);
    EXPECT_EQ(single.shells.back().members, 0u) << j;
  }
}

TEST(Stopping, TMinThreshold) {
  const auto all = tmin_threshold_density(ExactRational(1), 1 << 12);
  for (const auto& s : all.shells) EXPECT_EQ(s.fraction, 1.0);

  for (const char* th : {"0.7925", "0.1"}) {
    const ExactRational theta = ExactRational::parse(th);
    const auto rep = tmin_threshold_density(theta, 1 << 16);
    std::uint64_t direct = 0;
    for (std::uint64_t m = 1; m <= (1 << 16); ++m) {
      // T_min(m) = 1 for all m here; 1 <= m^theta always holds
      direct += 1;
    }
    EXPECT_EQ(rep.cumulative.back().members, direct) << th;
  }
  // a budget too small to descend leaves large m outside
  const auto tight = tmin_threshold_density(ExactRational::parse("0.1"), 1 << 12, 2, {.budget = 3});
  EXPECT_LT(tight.cumulative.back().fraction, 1.0);
  EXPECT_THROW(tmin_threshold_density(ExactRational(0), 100), PreconditionError);
}

TEST(Stopping, RatioHistogram) {
  const auto h = tau_ratio_histogram(1 << 12, 0.5);
  std::uint64_t total = 0;
  for (auto c : h.counts) total += c;
  EXPECT_EQ(total, (1u << 12) - 1);
  // powers of two have ratio exactly 1: bucket [1.0, 1.5)
  const auto only2 = tau_ratio_histogram(2, 0.5);
  ASSERT_EQ(only2.counts.size(), 3u);
  EXPECT_EQ(only2.counts[2], 1u);
  // m = 7: 11 / log2 7 = 3.918 -> bucket [3.5, 4.0)
  const auto h7 = tau_ratio_histogram(7, 0.5);
  EXPECT_GE(h7.counts.at(7), 1u);
  EXPECT_NEAR(11 / std::log2(7.0), 3.918, 1e-3);
}
