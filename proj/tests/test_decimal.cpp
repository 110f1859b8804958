#include <gtest/gtest.h>

#include <random>
#include <string>

#include "posbench/decimal.hpp"

using posbench::CostAmount;
using posbench::DecimalParseError;
using posbench::Money;

TEST(Decimal, ParsesPlainAndExponentForms) {
  EXPECT_EQ(Money::parse("0.12").units(), 120'000'000);
  EXPECT_EQ(Money::parse("0.0000004").units(), 400);
  EXPECT_EQ(Money::parse("4e-7").units(), 400);
  EXPECT_EQ(Money::parse("4E-7").units(), 400);
  EXPECT_EQ(Money::parse("-1.5").units(), -1'500'000'000);
  EXPECT_EQ(Money::parse("+2").units(), 2'000'000'000);
  EXPECT_EQ(Money::parse("1.25e2").units(), 125'000'000'000);
  EXPECT_EQ(Money::parse(".5").units(), 500'000'000);
}

TEST(Decimal, RejectsGarbage) {
  for (const char* bad : {"", "-", ".", "abc", "1.2.3", "1e", "e5", "1x", "--1"})
    EXPECT_THROW(Money::parse(bad), DecimalParseError) << bad;
}

TEST(Decimal, RoundsBeyondScaleHalfAwayFromZero) {
  EXPECT_EQ(Money::parse("0.0000000005").units(), 1);
  EXPECT_EQ(Money::parse("0.0000000004").units(), 0);
  EXPECT_EQ(Money::parse("-0.0000000005").units(), -1);
}

TEST(Decimal, FormatsFixedAndTrimmed) {
  EXPECT_EQ(Money::parse("0.52").to_string(), "0.520000000");
  EXPECT_EQ(Money::parse("0.52").to_string(2), "0.52");
  EXPECT_EQ(Money::parse("0.000057").to_trimmed_string(2), "0.000057");
  EXPECT_EQ(Money::parse("9").to_trimmed_string(2), "9.00");
  EXPECT_EQ(Money::parse("-0.5").to_string(1), "-0.5");
  EXPECT_EQ(Money{}.to_trimmed_string(), "0");
}

TEST(Decimal, RescaleIsExactUpAndRoundedDown) {
  const auto m = Money::parse("0.123456789");
  EXPECT_EQ(m.rescale<18>().units(), posbench::int128(123456789) * 1'000'000'000);
  const auto c = CostAmount::parse("0.0000000015");
  EXPECT_EQ(c.rescale<9>().units(), 2);
}

TEST(Decimal, ParseFormatRoundTripOnRandomValues) {
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<std::int64_t> dist(-1'000'000'000'000'000LL, 1'000'000'000'000'000LL);
  for (int i = 0; i < 10'000; ++i) {
    const auto m = Money::from_units(dist(gen));
    EXPECT_EQ(Money::parse(m.to_string()), m);
  }
}

TEST(Decimal, FromDoubleUsesShortestDecimalMeaning) {
  EXPECT_EQ(Money::from_double(0.1).units(), 100'000'000);
  EXPECT_EQ(Money::from_double(0.19).units(), 190'000'000);
  EXPECT_EQ(Money::from_double(4e-7).units(), 400);
}

TEST(Decimal, ArithmeticAndOrdering) {
  const auto a = Money::parse("1.10"), b = Money::parse("2.25");
  EXPECT_EQ((a + b).to_trimmed_string(2), "3.35");
  EXPECT_EQ((b - a).to_trimmed_string(2), "1.15");
  EXPECT_EQ((a * 3).to_trimmed_string(2), "3.30");
  EXPECT_LT(a, b);
  EXPECT_TRUE((a - a).is_zero());
  EXPECT_TRUE((a - b).is_negative());
}
