#ifndef BITFAULT_FLOAT_ANATOMY_HPP
#define BITFAULT_FLOAT_ANATOMY_HPP

#include <cstdint>
#include <string>

namespace bitfault {

inline constexpr int kExponentBias = 1023;
inline constexpr int kMantissaBits = 52;
inline constexpr int kExponentFieldMax = 2047;  // all-ones = Inf/NaN
inline constexpr int kMaxFiniteBiased = 2046;

enum class ValueKind { Zero, Subnormal, Normal, Infinity, NaN };

// Field-level view of one Binary64 word. Negative zero decomposes to
// {sign 1, Zero} and is treated as Zero everywhere downstream.
struct FloatAnatomy {
  unsigned sign = 0;             // 0 or 1
  int biased_exponent = 0;       // [0, 2047]
  std::uint64_t mantissa = 0;    // 52-bit fraction field
  ValueKind kind = ValueKind::Zero;
};

enum class BitRegion { Mantissa, Exponent, Sign };

std::uint64_t to_bits(double x);
double from_bits(std::uint64_t bits);

FloatAnatomy decompose(double x);
double reconstruct(const FloatAnatomy& a);

// Region is a pure function of the bit index: 0-51 mantissa, 52-62 exponent,
// 63 sign. Throws std::out_of_range outside [0, 63].
BitRegion bit_region(int index);

// Inverts exactly bit `index` of the stored representation. Total: Inf, NaN
// and subnormal results are returned as-is for the caller to classify.
double flip_bit(double x, int index);

// Smallest power of two strictly greater than |x|, i.e. 2^(e+1) for
// |x| = f * 2^e with f in [1, 2). For the top binade (e = 1023) the bound is
// not representable and +inf is returned. Throws std::domain_error for zero
// or non-finite input.
double order_of_magnitude_bound(double x);

const char* value_kind_name(ValueKind k);

// 11-character binary rendering of the stored exponent field.
std::string biased_exponent_bits(int biased_exponent);

}  // namespace bitfault

#endif
