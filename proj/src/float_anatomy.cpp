#include "bitfault/float_anatomy.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace bitfault {

std::uint64_t to_bits(double x) { return std::bit_cast<std::uint64_t>(x); }

double from_bits(std::uint64_t bits) { return std::bit_cast<double>(bits); }

FloatAnatomy decompose(double x) {
  const std::uint64_t u = to_bits(x);
  FloatAnatomy a;
  a.sign = static_cast<unsigned>(u >> 63);
  a.biased_exponent = static_cast<int>((u >> kMantissaBits) & 0x7ffULL);
  a.mantissa = u & ((1ULL << kMantissaBits) - 1);
  if (a.biased_exponent == kExponentFieldMax) {
    a.kind = a.mantissa == 0 ? ValueKind::Infinity : ValueKind::NaN;
  } else if (a.biased_exponent == 0) {
    a.kind = a.mantissa == 0 ? ValueKind::Zero : ValueKind::Subnormal;
  } else {
    a.kind = ValueKind::Normal;
  }
  return a;
}

double reconstruct(const FloatAnatomy& a) {
  const std::uint64_t u = (static_cast<std::uint64_t>(a.sign & 1u) << 63) |
                          (static_cast<std::uint64_t>(a.biased_exponent & 0x7ff) << kMantissaBits) |
                          (a.mantissa & ((1ULL << kMantissaBits) - 1));
  return from_bits(u);
}

BitRegion bit_region(int index) {
  if (index < 0 || index > 63) throw std::out_of_range("bit index outside [0, 63]");
  if (index < kMantissaBits) return BitRegion::Mantissa;
  if (index < 63) return BitRegion::Exponent;
  return BitRegion::Sign;
}

double flip_bit(double x, int index) {
  if (index < 0 || index > 63) throw std::out_of_range("bit index outside [0, 63]");
  return from_bits(to_bits(x) ^ (1ULL << index));
}

double order_of_magnitude_bound(double x) {
  if (x == 0.0 || !std::isfinite(x)) {
    throw std::domain_error("order_of_magnitude_bound requires finite nonzero input");
  }
  const int e = std::ilogb(x);  // true binade exponent, subnormals included
  return std::ldexp(1.0, e + 1);
}

const char* value_kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::Zero: return "zero";
    case ValueKind::Subnormal: return "subnormal";
    case ValueKind::Normal: return "normal";
    case ValueKind::Infinity: return "infinity";
    case ValueKind::NaN: return "nan";
  }
  return "?";
}

std::string biased_exponent_bits(int biased_exponent) {
  std::string s(11, '0');
  for (int i = 0; i < 11; ++i) {
    if (biased_exponent & (1 << (10 - i))) s[i] = '1';
  }
  return s;
}

}  // namespace bitfault
