#ifndef BITFAULT_SCALAR_FAULT_HPP
#define BITFAULT_SCALAR_FAULT_HPP

#include <array>

#include "bitfault/float_anatomy.hpp"
#include "bitfault/pow2.hpp"

namespace bitfault {

enum class FaultOutcome {
  Numeric,          // perturbed value finite and normal-or-better; abs_error valid
  NonNumeric,       // perturbed value is Inf or NaN
  ZeroOrSubnormal,  // flip landed on biased exponent 0; abs_error taken as |x|
};

// One single-bit upset of one scalar: which bit, what it produced, and the
// absolute error |x - x~| evaluated analytically (never by lossy subtraction
// across hundreds of orders of magnitude).
struct PerturbationRecord {
  int bit = 0;
  BitRegion region = BitRegion::Mantissa;
  double original = 0.0;
  double perturbed = 0.0;
  FaultOutcome outcome = FaultOutcome::Numeric;
  ScaledPow2 abs_error;  // valid for Numeric and ZeroOrSubnormal
  int delta_order = 0;   // mantissa 0, sign +1, exponent bit j: +/-2^j
};

// Single-bit perturbation of a finite scalar. Accepts zero and subnormal
// input so product-site faults can reuse it.
PerturbationRecord perturb_one(double x, int bit);

// All 64 single-bit upsets of a finite scalar. Throws std::domain_error for
// Inf or NaN input.
std::array<PerturbationRecord, 64> enumerate_perturbations(double x);

// Absolute error of one flip on a finite nonzero scalar (the analytic forms:
// mantissa place value, |x|(1 - 2^(+/-2^j)) for exponent bits, 2|x| for the
// sign). The record's outcome distinguishes NonNumeric and ZeroOrSubnormal.
PerturbationRecord scalar_abs_error(double x, int bit);

const char* fault_outcome_name(FaultOutcome o);
const char* bit_region_name(BitRegion r);

}  // namespace bitfault

#endif
