#ifndef BITFAULT_POW2_HPP
#define BITFAULT_POW2_HPP

#include <cmath>
#include <limits>

namespace bitfault {

// Magnitude stored as frac * 2^exp2 with frac in [1, 2), or exactly zero.
// Bit-flip errors span more than 600 orders of magnitude, so the exponent
// lives in an int and intermediate arithmetic can never overflow to Inf.
struct ScaledPow2 {
  double frac = 0.0;
  int exp2 = 0;

  static ScaledPow2 zero() { return {}; }

  static ScaledPow2 pow2(int e) { return {1.0, e}; }

  // Magnitude of a finite nonzero double.
  static ScaledPow2 from_abs(double x) {
    if (x == 0.0) return zero();
    int e = 0;
    double f = std::frexp(std::fabs(x), &e);  // f in [0.5, 1)
    return {2.0 * f, e - 1};
  }

  static ScaledPow2 make(double frac_in, int exp_in) {
    ScaledPow2 s{frac_in, exp_in};
    s.normalize();
    return s;
  }

  bool is_zero() const { return frac == 0.0; }

  void normalize() {
    if (frac == 0.0) {
      exp2 = 0;
      return;
    }
    while (frac >= 2.0) {
      frac *= 0.5;
      ++exp2;
    }
    while (frac < 1.0) {
      frac *= 2.0;
      --exp2;
    }
  }

  // Rounds to +/-inf or 0 outside the representable range.
  double value() const { return is_zero() ? 0.0 : std::ldexp(frac, exp2); }

  ScaledPow2 scaled_by_pow2(int shift) const {
    if (is_zero()) return zero();
    return {frac, exp2 + shift};
  }

  ScaledPow2 times(const ScaledPow2& o) const {
    if (is_zero() || o.is_zero()) return zero();
    return make(frac * o.frac, exp2 + o.exp2);
  }

  ScaledPow2 times_abs(double x) const { return times(from_abs(x)); }

  ScaledPow2 doubled() const { return is_zero() ? zero() : ScaledPow2{frac, exp2 + 1}; }

  // Comparisons against a positive finite threshold, exact in (frac, exp2) space.
  bool less_than(double t) const {
    ScaledPow2 o = from_abs(t);
    if (is_zero()) return !o.is_zero();
    return exp2 != o.exp2 ? exp2 < o.exp2 : frac < o.frac;
  }

  bool at_most(double t) const {
    ScaledPow2 o = from_abs(t);
    if (is_zero()) return true;
    return exp2 != o.exp2 ? exp2 < o.exp2 : frac <= o.frac;
  }
};

}  // namespace bitfault

#endif
