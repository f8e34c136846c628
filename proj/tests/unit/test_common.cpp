#include <gtest/gtest.h>

#include <limits>

#include "rugwatch/common.hpp"
#include "rugwatch/parallel.hpp"
#include "rugwatch/random.hpp"

using namespace rugwatch;

TEST(Address, ParsesCaseInsensitivelyAndRendersLowercase) {
  const auto a = Address::parse("0xC02aaA39b223FE8D0A0e5C4F27eAD9083C756Cc2");
  EXPECT_EQ(a.to_string(), "0xc02aaa39b223fe8d0a0e5c4f27ead9083c756cc2");
  EXPECT_EQ(Address::parse(a.to_string()), a);
}

TEST(Address, RejectsMalformedText) {
  EXPECT_THROW(Address::parse("c02aaa39b223fe8d0a0e5c4f27ead9083c756cc2"), Error);
  EXPECT_THROW(Address::parse("0x1234"), Error);
  EXPECT_THROW(Address::parse("0xg02aaa39b223fe8d0a0e5c4f27ead9083c756cc2"), Error);
  EXPECT_FALSE(Address::try_parse("0x").has_value());
}

TEST(Address, FromWordTakesLowTwentyBytes) {
  const std::string word = std::string(24, '0') + "c02aaa39b223fe8d0a0e5c4f27ead9083c756cc2";
  EXPECT_EQ(Address::from_word(word).to_string(), "0xc02aaa39b223fe8d0a0e5c4f27ead9083c756cc2");
}

TEST(Amount, DecimalParseHandlesLeadingZeros) {
  EXPECT_EQ(parse_amount("0"), Amount(0));
  EXPECT_EQ(parse_amount("0009"), Amount(9));
  EXPECT_EQ(parse_amount("010"), Amount(10));
}

TEST(Amount, DecimalParseRejectsSignsAndOverflow) {
  EXPECT_THROW(parse_amount("-5"), Error);
  EXPECT_THROW(parse_amount(""), Error);
  EXPECT_THROW(parse_amount("1e5"), Error);
  const std::string max = to_decimal(std::numeric_limits<Amount>::max());
  EXPECT_EQ(parse_amount(max), std::numeric_limits<Amount>::max());
  EXPECT_THROW(parse_amount(max + "0"), Error);
}

TEST(Amount, HexRoundTripsThroughAbiWord) {
  const Amount v = parse_amount("123456789012345678901234567890");
  EXPECT_EQ(parse_amount_hex(to_word(v)), v);
  EXPECT_EQ(parse_amount_hex("0x"), Amount(0));
  EXPECT_EQ(to_word(Amount(255)), std::string(62, '0') + "ff");
}

TEST(Amount, CheckedArithmeticThrowsOnUnderflow) {
  Amount a = 1;
  EXPECT_ANY_THROW(a -= Amount(2));
}

TEST(DecimalRational, ExactValues) {
  EXPECT_EQ(parse_decimal_rational("0.9"), Rational(9, 10));
  EXPECT_EQ(parse_decimal_rational("0.01"), Rational(1, 100));
  EXPECT_EQ(parse_decimal_rational("1"), Rational(1));
  EXPECT_EQ(parse_decimal_rational(".5"), Rational(1, 2));
  EXPECT_EQ(parse_decimal_rational("007.50"), Rational(15, 2));
  EXPECT_THROW(parse_decimal_rational("0.9x"), Error);
  EXPECT_THROW(parse_decimal_rational("-1"), Error);
  EXPECT_THROW(parse_decimal_rational("."), Error);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, UniformIntStaysInBounds) {
  Rng r(3);
  for (int i = 0; i < 10000; ++i) {
    const auto v = r.uniform_int(-3, 4);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 4);
  }
}

TEST(MixSeed, DistinctStreamsDiffer) {
  EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
  EXPECT_NE(mix_seed(1, 0), mix_seed(2, 0));
  EXPECT_EQ(mix_seed(5, 9), mix_seed(5, 9));
}

TEST(ParallelFor, VisitsEveryIndexOnceAndPropagatesErrors) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 37) throw Error(ErrorCode::NoData, "boom");
                            }),
               Error);
}
