#include "collatz_lab/log_compare.hpp"
#include "collatz_lab/natural.hpp"
#include "collatz_lab/rational.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace collatz_lab;

TEST(Natural, Nu2) {
  EXPECT_EQ(nu2(BigInt(12)), 2u);
  EXPECT_EQ(nu2(BigInt(7)), 0u);
  EXPECT_EQ(nu2(BigInt(64)), 6u);
  EXPECT_EQ(nu2(pow2(200)), 200u);
  EXPECT_EQ(nu2(std::uint64_t{96}), 5u);
  EXPECT_THROW(nu2(BigInt(0)), PreconditionError);
}

TEST(Natural, BitLengthAndLowBits) {
  EXPECT_EQ(bit_length(BigInt(1)), 1u);
  EXPECT_EQ(bit_length(std::uint64_t{1023}), 10u);
  EXPECT_EQ(bit_length(pow2(100)), 101u);
  EXPECT_EQ(low_bits(pow2(100) + 13, 4), 13u);
  EXPECT_EQ(low_bits(pow2(100) + 13, 64), 13u);
}

TEST(Natural, ConversionsRoundTrip) {
  const u128 big = (static_cast<u128>(0xdeadbeefULL) << 64) | 0x12345678ULL;
  EXPECT_EQ(to_u128(to_big(big)), big);
  EXPECT_FALSE(to_u64(to_big(big)).has_value());
  EXPECT_EQ(to_u64(BigInt(42)), 42u);
  EXPECT_FALSE(to_u128(pow2(128)).has_value());
}

TEST(Natural, ParseNatural) {
  EXPECT_EQ(parse_natural("0012"), BigInt(12));
  EXPECT_EQ(parse_natural("123456789012345678901234567890"), BigInt("123456789012345678901234567890"));
  EXPECT_THROW(parse_natural(""), PreconditionError);
  EXPECT_THROW(parse_natural("-3"), PreconditionError);
  EXPECT_THROW(parse_natural("1e5"), PreconditionError);
}

TEST(Natural, LnMatchesDoubleAndHugeValues) {
  EXPECT_NEAR(ln(BigInt(1000)), std::log(1000.0), 1e-12);
  EXPECT_NEAR(ln(pow2(5000)), 5000 * std::log(2.0), 1e-9);
}

TEST(Rational, ParseDecimalExactly) {
  EXPECT_EQ(ExactRational::parse("0.25"), ExactRational(BigInt(1), BigInt(4)));
  EXPECT_EQ(ExactRational::parse("0.1"), ExactRational(BigInt(1), BigInt(10)));
  EXPECT_EQ(ExactRational::parse("5/36"), ExactRational(BigInt(5), BigInt(36)));
  EXPECT_EQ(ExactRational::parse("2.5e-3"), ExactRational(BigInt(1), BigInt(400)));
  EXPECT_EQ(ExactRational::parse("-1.5"), ExactRational(BigInt(-3), BigInt(2)));
  EXPECT_EQ(ExactRational::parse("3e2"), ExactRational(300));
  EXPECT_THROW(ExactRational::parse("abc"), PreconditionError);
  EXPECT_THROW(ExactRational::parse("1/0"), PreconditionError);
}

TEST(Rational, FromDoubleUsesShortestDecimal) {
  EXPECT_EQ(ExactRational::from_double(0.1), ExactRational(BigInt(1), BigInt(10)));
  EXPECT_EQ(ExactRational::from_double(0.7925), ExactRational::parse("0.7925"));
}

TEST(Rational, CanonicalAfterEveryOperation) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<long> dist(-1000, 1000);
  ExactRational acc(1);
  for (int i = 0; i < 2000; ++i) {
    long n = dist(rng), d = dist(rng);
    if (d == 0) d = 1;
    const ExactRational q{BigInt(n), BigInt(d)};
    switch (i % 4) {
      case 0: acc += q; break;
      case 1: acc -= q; break;
      case 2: acc *= q; break;
      default: if (q.sign() != 0) acc /= q; break;
    }
    if (acc.sign() == 0) acc = ExactRational(1);
    ASSERT_EQ(boost::multiprecision::gcd(acc.numerator(), acc.denominator()), 1);
    ASSERT_GT(acc.denominator(), 0);
    // keep the numbers small
    if (bit_length(acc.denominator()) > 200) acc = ExactRational(1);
  }
}

TEST(LogForm, SimpleSigns) {
  LogLinearForm f;
  f.add(ExactRational(1), BigInt(3)).add(ExactRational(-1), BigInt(2));
  EXPECT_EQ(f.sign(), 1);  // ln 3 > ln 2
  LogLinearForm g;
  g.add(ExactRational(2), BigInt(2)).add(ExactRational(-1), BigInt(4));
  EXPECT_EQ(g.sign(), 0);  // 2 ln 2 == ln 4 exactly
  EXPECT_EQ(LogLinearForm().sign(), 0);
}

TEST(LogForm, NearTieNeedsHighPrecision) {
  // 3^12 vs 2^19: 531441 vs 524288; and 2^485 vs 3^306 differ by ~1e-4 relative.
  LogLinearForm f;
  f.add(ExactRational(485), BigInt(2)).add(ExactRational(-306), BigInt(3));
  EXPECT_EQ(f.sign(), (pow2(485) > pow3(306)) ? 1 : -1);

  // ln(2^60 + 1) - ln(2^60): positive but far below double resolution.
  LogLinearForm g;
  g.add(ExactRational(1), pow2(60) + 1).add(ExactRational(-60), BigInt(2));
  EXPECT_EQ(g.sign(), 1);

  // ln(2^3000 - 1) - 3000 ln 2 < 0, beyond 4096-bit MPFR; exact route decides.
  LogLinearForm h;
  h.add(ExactRational(1), pow2(3000) - 1).add(ExactRational(-3000), BigInt(2));
  EXPECT_EQ(h.sign(), -1);
}

TEST(LogForm, RationalCoefficientTies) {
  // (1/3) ln 8 - ln 2 == 0
  LogLinearForm f;
  f.add(ExactRational(BigInt(1), BigInt(3)), BigInt(8)).add(ExactRational(-1), BigInt(2));
  EXPECT_EQ(f.sign(), 0);
  // 0.1 ln(2^10) - ln 2 == 0
  LogLinearForm g;
  g.add(ExactRational::parse("0.1"), pow2(10)).add(ExactRational(-1), BigInt(2));
  EXPECT_EQ(g.sign(), 0);
}

TEST(LogForm, FloorQuotientExactBoundaries) {
  auto make = [](const BigInt& m) {
    return floor_quotient(
        ln(m), kLn2,
        [&] {
          LogLinearForm f;
          f.add(ExactRational(1), m);
          return f;
        },
        [] {
          LogLinearForm u;
          u.add(ExactRational(1), BigInt(2));
          return u;
        });
  };
  for (unsigned j = 0; j < 300; ++j) {
    ASSERT_EQ(make(pow2(j)), static_cast<std::int64_t>(j));
    if (j >= 2) {
      ASSERT_EQ(make(pow2(j) - 1), static_cast<std::int64_t>(j) - 1);
    }
  }
}

TEST(LogForm, ConstantsMatchDefinitions) {
  const double l2s3 = std::log2(std::sqrt(3.0));
  EXPECT_NEAR(MathConstants::log2_sqrt3, l2s3, 1e-15);
  EXPECT_NEAR(MathConstants::range_coeff, 1 / (1 - l2s3), 1e-13);
  EXPECT_NEAR(MathConstants::natural_log_coeff, 2 / std::log(4.0 / 3.0), 1e-13);
  EXPECT_NEAR(MathConstants::terras_coeff, 1 / std::log(2.0), 1e-15);
  EXPECT_NEAR(MathConstants::syracuse_coeff, 1 / std::log2(4.0 / 3.0), 1e-13);
  EXPECT_NEAR(MathConstants::col_coeff, 3 / (2 - std::log2(3.0)), 1e-13);
  // ranges agree across bases: log2 m * range_coeff == ln m * natural_log_coeff
  EXPECT_NEAR(MathConstants::range_coeff / std::log(2.0), MathConstants::natural_log_coeff, 1e-12);
}
