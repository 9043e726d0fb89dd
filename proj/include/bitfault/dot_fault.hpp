#ifndef BITFAULT_DOT_FAULT_HPP
#define BITFAULT_DOT_FAULT_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bitfault/scalar_fault.hpp"

namespace bitfault {

// -------------------------------------------------------------------------
// Exponent intervals
// -------------------------------------------------------------------------

// Closed range of biased exponents covering a vector's nonzero values.
// `hi` is already widened by +1 past the largest observed exponent so that
// truncated mantissas (and a mantissa carry) stay inside the range. Zeros and
// subnormals never affect lo/hi; they only set contains_zero.
struct ExponentInterval {
  int lo = 0;
  int hi = 0;
  bool contains_zero = false;
  bool empty = true;  // all-zero vector: no lo/hi

  static ExponentInterval single(int biased) { return {biased, biased, false, false}; }
  static ExponentInterval range(int lo, int hi) { return {lo, hi, false, false}; }

  int width() const { return empty ? 0 : hi - lo + 1; }
};

// Per-element extraction: lo = min biased exponent over nonzero normal
// elements, hi = max + 1 (clamped to 2046). Throws std::domain_error on
// non-finite elements or an empty vector.
ExponentInterval extract_interval(std::span<const double> v);

// -------------------------------------------------------------------------
// Exact per-element dot-product fault enumeration
// -------------------------------------------------------------------------

// Sequential left-to-right accumulation; deterministic so the fault
// enumeration below is well defined. Throws on length mismatch.
double dot_product(std::span<const double> a, std::span<const double> b);

enum class FaultSite { OperandA, OperandB, Product };

// Additive error one bit flip injects into a dot product, for one flip site.
// Flips on a_i and b_i flow through the multiplication; flips on the
// intermediate c_i = a_i*b_i perturb the addend directly.
struct DotFaultRecord {
  FaultSite site = FaultSite::OperandA;
  std::size_t index = 0;
  int bit = 0;
  BitRegion region = BitRegion::Mantissa;
  double site_original = 0.0;
  double site_perturbed = 0.0;
  FaultOutcome outcome = FaultOutcome::Numeric;
  ScaledPow2 abs_error;  // valid unless outcome is NonNumeric
};

// 3 sites x 64 bits per element pair. Throws on length mismatch or
// non-finite input.
std::vector<DotFaultRecord> enumerate_dot_errors(std::span<const double> a,
                                                 std::span<const double> b);

// Strict upper bound 4 * alpha_exp * beta_exp covering the product alpha*beta,
// the sign-flip error 2*alpha*beta, and every mantissa-flip error, for
// operands with binade exponents alpha_exp2 and beta_exp2 (true, unbiased).
ScaledPow2 bound_mantissa_and_sign(int alpha_exp2, int beta_exp2);

// -------------------------------------------------------------------------
// Error class tallies
// -------------------------------------------------------------------------

// Error classes for a solve with 2-norm `threshold`:
//   class 1: absolute error < 1            (undetectable, harmless)
//   class 2: 1 <= error <= threshold       (undetectable "grey area")
//   class 3: error > threshold             (detectable)
//   class 4: non-numeric (Inf/NaN)         (detectable)
struct ErrorClassTally {
  std::uint64_t class1_lt_one = 0;
  std::uint64_t class2_grey = 0;
  std::uint64_t class3_detectable = 0;
  std::uint64_t class4_nonnumeric = 0;
  double threshold = 0.0;

  std::uint64_t total() const {
    return class1_lt_one + class2_grey + class3_detectable + class4_nonnumeric;
  }
  double share1() const { return total() ? double(class1_lt_one) / double(total()) : 0.0; }
  double share2() const { return total() ? double(class2_grey) / double(total()) : 0.0; }
  double share3() const { return total() ? double(class3_detectable) / double(total()) : 0.0; }
  double share4() const { return total() ? double(class4_nonnumeric) / double(total()) : 0.0; }

  void add(const ErrorClassTally& o) {
    class1_lt_one += o.class1_lt_one;
    class2_grey += o.class2_grey;
    class3_detectable += o.class3_detectable;
    class4_nonnumeric += o.class4_nonnumeric;
  }
};

// -------------------------------------------------------------------------
// Exponent-pair lookup table
// -------------------------------------------------------------------------

// One exponent-bit flip evaluated at the binade representative 2^(biased-1023):
// the perturbed value, classified, with the error as frac * 2^exp2.
struct ExponentFlipOutcome {
  FaultOutcome kind = FaultOutcome::Numeric;
  double frac = 0.0;  // error = frac * 2^exp2 before any operand scaling
  int exp2 = 0;
  int flipped_biased = 0;
};

inline constexpr int kBiasedCount = 2047;   // biased exponents 0..2046
inline constexpr int kExponentBitCount = 11;

// Fault model for a product a*b indexed by the operands' biased exponents.
// Conceptually a 2047 x 2047 matrix of cells; each cell enumerates, for the
// pair's representatives, the 11 exponent-bit flips on each operand and on
// the intermediate product (exponent i + j - 1023, clamped to [1, 2046]),
// plus one bounded category each for the mantissa and sign bits. Cells are
// assembled on demand from a per-exponent core, so the pairwise table costs
// nothing to "build" and all 2047^2 cells stay available.
class ErrorLookupTable {
 public:
  static ErrorLookupTable build();

  const ExponentFlipOutcome& exponent_flip(int biased, int k) const {
    return core_[static_cast<std::size_t>(biased) * kExponentBitCount + static_cast<std::size_t>(k)];
  }

  // Biased exponent of the intermediate product for cell (i, j).
  static int product_biased(int i, int j);

  // Adds cell (i, j)'s outcomes to `tally` under the given threshold.
  // Exponent-bit categories (11 per site, 3 sites) are always counted.
  // When include_sign_mantissa is set, the per-site sign and mantissa
  // bounded categories (error < 4 * a_exp * b_exp) are counted as well.
  void tally_cell(int i, int j, double threshold, bool include_sign_mantissa,
                  ErrorClassTally& tally) const;

  bool built() const { return !core_.empty(); }

 private:
  std::vector<ExponentFlipOutcome> core_;  // [biased][k]
};

// Classifies one error magnitude against the fixed boundary 1 and the
// query-time threshold; returns 1..3. Non-numeric outcomes are class 4.
int classify_magnitude(const ScaledPow2& err, double threshold);

// Cartesian-product tally: every exponent pair in interval_a x interval_b
// contributes its cell's outcomes once. Zero elements contribute no flips in
// interval mode (deliberate under-count; zero carries no exponent).
// Degenerate intervals produce an empty tally.
ErrorClassTally classify_errors(const ExponentInterval& interval_a,
                                const ExponentInterval& interval_b,
                                const ErrorLookupTable& table, double threshold,
                                bool include_sign_mantissa = false);

// Classify an exact enumeration (dot-analyze --exact): every (element, site,
// bit) record counts once, all 64 bits enumerated individually.
ErrorClassTally classify_exact(const std::vector<DotFaultRecord>& records, double threshold);

// -------------------------------------------------------------------------
// Persisted table cells
// -------------------------------------------------------------------------

// Binary cell export. Layout (little-endian):
//   header: magic "BFLTBL01" (8 bytes), u32 version, u32 flags (bit 0: upper
//           triangle only)                          -> 16 bytes
//   range:  u32 lo, u32 hi (stored biased-exponent range) -> 8 bytes
//   cells:  row-major over i in [lo,hi], j in [i or lo, hi]; one cell is 33
//           slots (site a bits 0-10, site b bits 0-10, product bits 0-10),
//           each slot 4 bytes: u8 kind (0 numeric / 1 non-numeric / 2 zero-
//           or-subnormal), u8 flip bit index, i16 floor exponent of the error
//           (error in [2^e, 2^(e+1))); kind != numeric stores e = 0.
struct TableCellSlot {
  std::uint8_t kind = 0;
  std::uint8_t bit = 0;
  std::int16_t exp2 = 0;
};

struct TableFileHeader {
  std::uint32_t version = 1;
  std::uint32_t flags = 0;
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;
};

void write_table_file(const ErrorLookupTable& table, const std::string& path, int lo, int hi,
                      bool upper_triangle_only);
TableFileHeader read_table_file_header(const std::string& path);
std::vector<TableCellSlot> read_table_file_cell(const std::string& path, int i, int j);

const char* fault_site_name(FaultSite s);

}  // namespace bitfault

#endif
