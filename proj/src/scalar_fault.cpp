#include "bitfault/scalar_fault.hpp"

#include <cmath>
#include <stdexcept>

namespace bitfault {

namespace {

// |x - x2| for a normal->normal exponent flip: both values share the
// significand m, so the difference is m * 2^max(e1,e2) * (1 - 2^-d). The
// true value is strictly below m * 2^max; when rounding lands on it (d >= 54)
// the stored fraction steps one ulp down so that classification against the
// dyadic boundaries 1 and 2^k stays exact.
ScaledPow2 exponent_flip_error(double m, int biased_hi, int d) {
  double frac = m * (1.0 - std::ldexp(1.0, -d));
  if (frac >= m) frac = std::nextafter(m, 0.0);
  return ScaledPow2::make(frac, biased_hi - kExponentBias);
}

}  // namespace

PerturbationRecord perturb_one(double x, int bit) {
  if (!std::isfinite(x)) throw std::domain_error("perturb_one requires finite input");
  PerturbationRecord r;
  r.bit = bit;
  r.region = bit_region(bit);
  r.original = x;
  r.perturbed = flip_bit(x, bit);

  const FloatAnatomy a = decompose(x);
  switch (r.region) {
    case BitRegion::Mantissa: {
      const int e_eff = a.biased_exponent == 0 ? -1022 : a.biased_exponent - kExponentBias;
      r.abs_error = ScaledPow2::pow2(e_eff + bit - kMantissaBits);
      r.delta_order = 0;
      break;
    }
    case BitRegion::Sign: {
      r.abs_error = ScaledPow2::from_abs(x).doubled();
      r.delta_order = 1;
      break;
    }
    case BitRegion::Exponent: {
      const int j = bit - kMantissaBits;
      const int b = a.biased_exponent;
      const int b2 = b ^ (1 << j);
      r.delta_order = (b2 > b ? 1 : -1) * (1 << j);
      if (b2 == kExponentFieldMax) {
        r.outcome = FaultOutcome::NonNumeric;
      } else if (b == 0) {
        // Zero or subnormal input jumps to a normal value; magnitudes stay
        // below 4 so plain subtraction is safe.
        r.abs_error = ScaledPow2::from_abs(r.perturbed - x);
      } else if (b2 == 0) {
        r.outcome = FaultOutcome::ZeroOrSubnormal;
        r.abs_error = ScaledPow2::from_abs(x);
      } else {
        const double m = 1.0 + std::ldexp(static_cast<double>(a.mantissa), -kMantissaBits);
        r.abs_error = exponent_flip_error(m, b > b2 ? b : b2, std::abs(b - b2));
      }
      break;
    }
  }
  return r;
}

std::array<PerturbationRecord, 64> enumerate_perturbations(double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("enumerate_perturbations requires finite input");
  }
  std::array<PerturbationRecord, 64> out;
  for (int bit = 0; bit < 64; ++bit) out[static_cast<std::size_t>(bit)] = perturb_one(x, bit);
  return out;
}

PerturbationRecord scalar_abs_error(double x, int bit) {
  if (!std::isfinite(x) || x == 0.0) {
    throw std::domain_error("scalar_abs_error requires finite nonzero input");
  }
  return perturb_one(x, bit);
}

const char* fault_outcome_name(FaultOutcome o) {
  switch (o) {
    case FaultOutcome::Numeric: return "numeric";
    case FaultOutcome::NonNumeric: return "non-numeric";
    case FaultOutcome::ZeroOrSubnormal: return "zero-or-subnormal";
  }
  return "?";
}

const char* bit_region_name(BitRegion r) {
  switch (r) {
    case BitRegion::Mantissa: return "mantissa";
    case BitRegion::Exponent: return "exponent";
    case BitRegion::Sign: return "sign";
  }
  return "?";
}

}  // namespace bitfault
