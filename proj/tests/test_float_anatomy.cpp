#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "bitfault/float_anatomy.hpp"
#include "bitfault/rng.hpp"

using namespace bitfault;

TEST_CASE("decompose classifies the stored fields") {
  const FloatAnatomy half = decompose(0.5);
  CHECK(half.sign == 0);
  CHECK(half.biased_exponent == 1022);
  CHECK(half.mantissa == 0);
  CHECK(half.kind == ValueKind::Normal);
  CHECK(biased_exponent_bits(half.biased_exponent) == "01111111110");

  const FloatAnatomy one = decompose(1.0);
  CHECK(one.biased_exponent == 1023);
  CHECK(one.mantissa == 0);
  CHECK(one.kind == ValueKind::Normal);
  CHECK(biased_exponent_bits(one.biased_exponent) == "01111111111");

  const FloatAnatomy zero = decompose(0.0);
  CHECK(zero.sign == 0);
  CHECK(zero.biased_exponent == 0);
  CHECK(zero.mantissa == 0);
  CHECK(zero.kind == ValueKind::Zero);

  CHECK(decompose(-0.0).sign == 1);
  CHECK(decompose(-0.0).kind == ValueKind::Zero);
  CHECK(decompose(std::numeric_limits<double>::infinity()).kind == ValueKind::Infinity);
  CHECK(decompose(std::numeric_limits<double>::quiet_NaN()).kind == ValueKind::NaN);
  CHECK(decompose(5e-324).kind == ValueKind::Subnormal);
}

TEST_CASE("decompose/reconstruct round-trips random bit patterns") {
  SplitMix64 rng(17);
  for (int i = 0; i < 1'000'000; ++i) {
    const std::uint64_t bits = rng.next();
    const double x = from_bits(bits);
    CHECK(to_bits(reconstruct(decompose(x))) == bits);
  }
}

TEST_CASE("bit regions partition the word") {
  for (int i = 0; i < 52; ++i) CHECK(bit_region(i) == BitRegion::Mantissa);
  for (int i = 52; i < 63; ++i) CHECK(bit_region(i) == BitRegion::Exponent);
  CHECK(bit_region(63) == BitRegion::Sign);
  CHECK_THROWS_AS(bit_region(64), std::out_of_range);
  CHECK_THROWS_AS(bit_region(-1), std::out_of_range);
}

TEST_CASE("flip_bit known flips") {
  // Top exponent bit of 2.0: biased 1024 -> 0, i.e. the value collapses.
  CHECK(flip_bit(2.0, 62) == 0.0);
  // Lowest exponent bit of 0.5: biased 1022 -> 1023 = 1.0.
  CHECK(flip_bit(0.5, 52) == 1.0);
  CHECK(flip_bit(std::numbers::pi, 17) != std::numbers::pi);
  CHECK(flip_bit(flip_bit(std::numbers::pi, 17), 17) == std::numbers::pi);
}

TEST_CASE("flip_bit is an involution and touches only its region") {
  SplitMix64 rng(99);
  for (int i = 0; i < 1'000'000; ++i) {
    const double x = from_bits(rng.next());
    const int bit = static_cast<int>(rng.next() & 63);
    CHECK(to_bits(flip_bit(flip_bit(x, bit), bit)) == to_bits(x));
  }
  for (int i = 0; i < 20'000; ++i) {
    const double x = from_bits(rng.next());
    const FloatAnatomy before = decompose(x);
    const int mbit = static_cast<int>(rng.next() % 52);
    const FloatAnatomy after_mantissa = decompose(flip_bit(x, mbit));
    CHECK(after_mantissa.sign == before.sign);
    CHECK(after_mantissa.biased_exponent == before.biased_exponent);
    const FloatAnatomy after_sign = decompose(flip_bit(x, 63));
    CHECK(after_sign.sign != before.sign);
    CHECK(after_sign.biased_exponent == before.biased_exponent);
    CHECK(after_sign.mantissa == before.mantissa);
  }
}

TEST_CASE("order_of_magnitude_bound examples") {
  CHECK(order_of_magnitude_bound(2.12332) == 4.0);
  CHECK(order_of_magnitude_bound(1.24568) == 2.0);
  CHECK(order_of_magnitude_bound(1.0) == 2.0);
  // Oracle: bump the decomposed exponent by one and rebuild the power of two.
  {
    const FloatAnatomy a = decompose(0.75);
    FloatAnatomy bound;
    bound.biased_exponent = a.biased_exponent + 1;
    bound.kind = ValueKind::Normal;
    CHECK(order_of_magnitude_bound(0.75) == reconstruct(bound));
    CHECK(order_of_magnitude_bound(0.75) == 1.0);
  }
  CHECK_THROWS_AS(order_of_magnitude_bound(0.0), std::domain_error);
  CHECK_THROWS_AS(order_of_magnitude_bound(std::numeric_limits<double>::infinity()),
                  std::domain_error);
  CHECK_THROWS_AS(order_of_magnitude_bound(std::numeric_limits<double>::quiet_NaN()),
                  std::domain_error);
  // Top binade: the bound 2^1024 is not representable.
  CHECK(std::isinf(order_of_magnitude_bound(std::numeric_limits<double>::max())));
}

TEST_CASE("ordering chain |x| < bound <= 2|x| for finite nonzero x") {
  SplitMix64 rng(2024);
  int checked = 0;
  while (checked < 200'000) {
    const double x = from_bits(rng.next());
    if (!std::isfinite(x) || x == 0.0) continue;
    ++checked;
    const double bound = order_of_magnitude_bound(x);
    CHECK(std::fabs(x) < bound);
    CHECK(bound <= 2.0 * std::fabs(x));  // inf <= inf at the top binade
  }
}
