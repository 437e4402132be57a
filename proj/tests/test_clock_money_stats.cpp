#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "slam/clock.h"
#include "slam/error.h"
#include "slam/money.h"
#include "slam/stats.h"

using namespace slam;

TEST(Clock, Rfc3339RoundTrip) {
  UtcTime t = parse_rfc3339("2023-11-13T08:00:00.123456Z");
  EXPECT_EQ(format_rfc3339(t), "2023-11-13T08:00:00.123456Z");
  EXPECT_EQ(format_rfc3339(parse_rfc3339("2024-02-29T23:59:59Z")),
            "2024-02-29T23:59:59.000000Z");
}

TEST(Clock, RejectsNonUtcAndGarbage) {
  EXPECT_THROW(parse_rfc3339("2023-11-13T08:00:00+01:00"), Error);
  EXPECT_THROW(parse_rfc3339("yesterday"), Error);
}

TEST(Clock, ManualClockOnlyMovesOnSleep) {
  ManualClock c(parse_rfc3339("2023-11-13T00:00:00Z"));
  auto a = c.now();
  EXPECT_EQ(c.now(), a);
  c.sleep_for(std::chrono::seconds(10));
  EXPECT_EQ(c.now() - a, std::chrono::seconds(10));
  EXPECT_EQ(c.monotonic(), std::chrono::seconds(10));
  c.sleep_until(a + std::chrono::seconds(5));  // already past
  EXPECT_EQ(c.now() - a, std::chrono::seconds(10));
}

TEST(Money, ParseAndFormat) {
  EXPECT_EQ(Money::parse("0.03").micros(), 30000);
  EXPECT_EQ(Money::parse("$2700").micros(), 2700000000LL);
  EXPECT_EQ(Money::parse("-1.5").micros(), -1500000);
  EXPECT_EQ(Money::parse("0.0031").to_string(), "0.003100");
  EXPECT_EQ(Money::from_micros(-5).to_string(), "-0.000005");
  EXPECT_THROW(Money::parse("0.0000001"), Error);
  EXPECT_THROW(Money::parse("abc"), Error);
  EXPECT_THROW(Money::parse(""), Error);
}

TEST(Money, FromDollarsRoundsToMicros) {
  EXPECT_EQ(Money::from_dollars(0.09).micros(), 90000);
  EXPECT_EQ(Money::from_dollars(0.0000015).micros(), 2);
}

TEST(Money, RatioTimesIsExact) {
  MoneyRatio r{5, 1};
  EXPECT_EQ(r.times(Money::parse("0.018")), Money::parse("0.09"));
  MoneyRatio third{1, 3};
  EXPECT_THROW(third.times(Money::from_micros(10)), Error);
}

TEST(Stats, QuartilesInclusiveInterpolation) {
  std::vector<double> v{1, 2, 3, 4};
  auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.quartiles.min, 1);
  EXPECT_DOUBLE_EQ(s.quartiles.q1, 1.75);
  EXPECT_DOUBLE_EQ(s.quartiles.median, 2.5);
  EXPECT_DOUBLE_EQ(s.quartiles.q3, 3.25);
  EXPECT_DOUBLE_EQ(s.quartiles.max, 4);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
}

TEST(Stats, SingleValueCollapses) {
  std::vector<double> v{7};
  auto s = summarize(v);
  EXPECT_EQ(s.quartiles.min, 7);
  EXPECT_EQ(s.quartiles.q1, 7);
  EXPECT_EQ(s.quartiles.median, 7);
  EXPECT_EQ(s.quartiles.q3, 7);
  EXPECT_EQ(s.quartiles.max, 7);
}

TEST(Stats, EmptyThrows) {
  std::vector<double> v;
  EXPECT_THROW(summarize(v), Error);
}

TEST(Stats, QuartilesAreOrdered) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-100, 100);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng() % 40);
    for (auto& x : v) x = d(rng);
    auto s = summarize(v);
    EXPECT_LE(s.quartiles.min, s.quartiles.q1);
    EXPECT_LE(s.quartiles.q1, s.quartiles.median);
    EXPECT_LE(s.quartiles.median, s.quartiles.q3);
    EXPECT_LE(s.quartiles.q3, s.quartiles.max);
    EXPECT_GE(s.mean, s.quartiles.min);
    EXPECT_LE(s.mean, s.quartiles.max);
  }
}

TEST(Stats, HashesAreStable) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_NE(mix64(1), mix64(2));
}

TEST(Errors, MessageCarriesCodeName) {
  Error e(ErrorCode::kKTooLarge, "k=11");
  EXPECT_EQ(std::string(e.what()), "KTooLarge: k=11");
  EXPECT_EQ(e.code(), ErrorCode::kKTooLarge);
}
