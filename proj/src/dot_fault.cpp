#include "bitfault/dot_fault.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace bitfault {

// -------------------------------------------------------------------------
// Intervals
// -------------------------------------------------------------------------

ExponentInterval extract_interval(std::span<const double> v) {
  if (v.empty()) throw std::domain_error("extract_interval requires a nonempty vector");
  ExponentInterval iv;
  int lo = kExponentFieldMax;
  int hi = -1;
  for (double x : v) {
    if (!std::isfinite(x)) throw std::domain_error("extract_interval requires finite elements");
    const FloatAnatomy a = decompose(x);
    if (a.kind == ValueKind::Zero || a.kind == ValueKind::Subnormal) {
      iv.contains_zero = true;
      continue;
    }
    lo = std::min(lo, a.biased_exponent);
    hi = std::max(hi, a.biased_exponent);
  }
  if (hi < 0) return iv;  // all zero: degenerate, contains_zero set
  iv.empty = false;
  iv.lo = lo;
  iv.hi = std::min(hi + 1, kMaxFiniteBiased);
  return iv;
}

// -------------------------------------------------------------------------
// Exact enumeration
// -------------------------------------------------------------------------

double dot_product(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot_product length mismatch");
  double c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) c += a[i] * b[i];
  return c;
}

namespace {

DotFaultRecord operand_site_record(FaultSite site, std::size_t index, double x, double other,
                                   int bit) {
  const PerturbationRecord p = perturb_one(x, bit);
  DotFaultRecord r;
  r.site = site;
  r.index = index;
  r.bit = bit;
  r.region = p.region;
  r.site_original = x;
  r.site_perturbed = p.perturbed;
  r.outcome = p.outcome;
  if (p.outcome != FaultOutcome::NonNumeric) {
    r.abs_error = p.abs_error.times_abs(other);
  }
  return r;
}

DotFaultRecord product_site_record(std::size_t index, double c, int bit) {
  const PerturbationRecord p = perturb_one(c, bit);
  DotFaultRecord r;
  r.site = FaultSite::Product;
  r.index = index;
  r.bit = bit;
  r.region = p.region;
  r.site_original = c;
  r.site_perturbed = p.perturbed;
  r.outcome = p.outcome;
  if (p.outcome != FaultOutcome::NonNumeric) r.abs_error = p.abs_error;
  return r;
}

}  // namespace

std::vector<DotFaultRecord> enumerate_dot_errors(std::span<const double> a,
                                                 std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("enumerate_dot_errors length mismatch");
  std::vector<DotFaultRecord> out;
  out.reserve(a.size() * 3 * 64);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
      throw std::domain_error("enumerate_dot_errors requires finite elements");
    }
    const double c = a[i] * b[i];
    if (!std::isfinite(c)) {
      throw std::domain_error("enumerate_dot_errors: intermediate product overflows");
    }
    for (int bit = 0; bit < 64; ++bit) {
      out.push_back(operand_site_record(FaultSite::OperandA, i, a[i], b[i], bit));
    }
    for (int bit = 0; bit < 64; ++bit) {
      out.push_back(operand_site_record(FaultSite::OperandB, i, b[i], a[i], bit));
    }
    for (int bit = 0; bit < 64; ++bit) {
      out.push_back(product_site_record(i, c, bit));
    }
  }
  return out;
}

ScaledPow2 bound_mantissa_and_sign(int alpha_exp2, int beta_exp2) {
  return ScaledPow2::pow2(alpha_exp2 + beta_exp2 + 2);
}

// -------------------------------------------------------------------------
// Lookup table
// -------------------------------------------------------------------------

ErrorLookupTable ErrorLookupTable::build() {
  ErrorLookupTable t;
  t.core_.resize(static_cast<std::size_t>(kBiasedCount) * kExponentBitCount);
  for (int b = 0; b < kBiasedCount; ++b) {
    for (int k = 0; k < kExponentBitCount; ++k) {
      ExponentFlipOutcome& o =
          t.core_[static_cast<std::size_t>(b) * kExponentBitCount + static_cast<std::size_t>(k)];
      const int b2 = b ^ (1 << k);
      o.flipped_biased = b2;
      if (b2 == kExponentFieldMax) {
        o.kind = FaultOutcome::NonNumeric;
        continue;
      }
      if (b == 0) {
        // Zero-operand row: the flip conjures 2^(b2-1023) out of nothing.
        o.kind = FaultOutcome::Numeric;
        o.frac = 1.0;
        o.exp2 = b2 - kExponentBias;
        continue;
      }
      if (b2 == 0) {
        o.kind = FaultOutcome::ZeroOrSubnormal;
        o.frac = 1.0;
        o.exp2 = b - kExponentBias;  // zeroing out: error equals the original magnitude
        continue;
      }
      // Both normal. At the representative 2^(b-1023) the error is
      // (1 - 2^-d) * 2^(max(b,b2)-1023) with d = |b - b2|.
      const int d = std::abs(b - b2);
      const int hi = std::max(b, b2);
      double frac = 2.0 * (1.0 - std::ldexp(1.0, -d));
      if (frac >= 2.0) frac = std::nextafter(2.0, 0.0);  // keep error strictly below 2^exp2+1
      o.kind = FaultOutcome::Numeric;
      o.frac = frac;
      o.exp2 = hi - kExponentBias - 1;
    }
  }
  return t;
}

int ErrorLookupTable::product_biased(int i, int j) {
  return std::clamp(i + j - kExponentBias, 1, kMaxFiniteBiased);
}

int classify_magnitude(const ScaledPow2& err, double threshold) {
  if (err.less_than(1.0)) return 1;
  if (err.at_most(threshold)) return 2;
  return 3;
}

namespace {

void tally_one(const ExponentFlipOutcome& o, int scale_exp2, double threshold,
               ErrorClassTally& tally) {
  if (o.kind == FaultOutcome::NonNumeric) {
    ++tally.class4_nonnumeric;
    return;
  }
  const ScaledPow2 err{o.frac, o.exp2 + scale_exp2};
  switch (classify_magnitude(err, threshold)) {
    case 1: ++tally.class1_lt_one; break;
    case 2: ++tally.class2_grey; break;
    default: ++tally.class3_detectable; break;
  }
}

}  // namespace

void ErrorLookupTable::tally_cell(int i, int j, double threshold, bool include_sign_mantissa,
                                  ErrorClassTally& tally) const {
  const int ea = i - kExponentBias;
  const int eb = j - kExponentBias;
  const int p = product_biased(i, j);
  for (int k = 0; k < kExponentBitCount; ++k) {
    tally_one(exponent_flip(i, k), eb, threshold, tally);
    tally_one(exponent_flip(j, k), ea, threshold, tally);
    tally_one(exponent_flip(p, k), 0, threshold, tally);
  }
  if (include_sign_mantissa) {
    const ScaledPow2 bound = bound_mantissa_and_sign(ea, eb);
    const int cls = classify_magnitude(bound, threshold);
    for (int site = 0; site < 3; ++site) {
      for (int cat = 0; cat < 2; ++cat) {  // mantissa category, sign category
        switch (cls) {
          case 1: ++tally.class1_lt_one; break;
          case 2: ++tally.class2_grey; break;
          default: ++tally.class3_detectable; break;
        }
      }
    }
  }
}

ErrorClassTally classify_errors(const ExponentInterval& interval_a,
                                const ExponentInterval& interval_b, const ErrorLookupTable& table,
                                double threshold, bool include_sign_mantissa) {
  ErrorClassTally tally;
  tally.threshold = threshold;
  if (interval_a.empty || interval_b.empty) return tally;
  for (int i = interval_a.lo; i <= interval_a.hi; ++i) {
    for (int j = interval_b.lo; j <= interval_b.hi; ++j) {
      table.tally_cell(i, j, threshold, include_sign_mantissa, tally);
    }
  }
  return tally;
}

ErrorClassTally classify_exact(const std::vector<DotFaultRecord>& records, double threshold) {
  ErrorClassTally tally;
  tally.threshold = threshold;
  for (const DotFaultRecord& r : records) {
    if (r.outcome == FaultOutcome::NonNumeric) {
      ++tally.class4_nonnumeric;
      continue;
    }
    switch (classify_magnitude(r.abs_error, threshold)) {
      case 1: ++tally.class1_lt_one; break;
      case 2: ++tally.class2_grey; break;
      default: ++tally.class3_detectable; break;
    }
  }
  return tally;
}

// -------------------------------------------------------------------------
// Table file
// -------------------------------------------------------------------------

namespace {

constexpr char kTableMagic[8] = {'B', 'F', 'L', 'T', 'B', 'L', '0', '1'};
constexpr std::size_t kHeaderBytes = 24;
constexpr std::size_t kSlotsPerCell = 3 * kExponentBitCount;
constexpr std::size_t kCellBytes = kSlotsPerCell * 4;

void put_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& f) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void encode_slot(const ExponentFlipOutcome& o, int scale_exp2, int word_bit,
                 unsigned char out[4]) {
  std::uint8_t kind = 0;
  std::int16_t e = 0;
  switch (o.kind) {
    case FaultOutcome::Numeric:
      kind = 0;
      e = static_cast<std::int16_t>(o.exp2 + scale_exp2);
      break;
    case FaultOutcome::NonNumeric: kind = 1; break;
    case FaultOutcome::ZeroOrSubnormal:
      kind = 2;
      e = static_cast<std::int16_t>(o.exp2 + scale_exp2);
      break;
  }
  out[0] = kind;
  out[1] = static_cast<std::uint8_t>(word_bit);
  out[2] = static_cast<unsigned char>(static_cast<std::uint16_t>(e));
  out[3] = static_cast<unsigned char>(static_cast<std::uint16_t>(e) >> 8);
}

void encode_cell(const ErrorLookupTable& table, int i, int j, unsigned char* out) {
  const int ea = i - kExponentBias;
  const int eb = j - kExponentBias;
  const int p = ErrorLookupTable::product_biased(i, j);
  std::size_t off = 0;
  for (int k = 0; k < kExponentBitCount; ++k, off += 4) {
    encode_slot(table.exponent_flip(i, k), eb, kMantissaBits + k, out + off);
  }
  for (int k = 0; k < kExponentBitCount; ++k, off += 4) {
    encode_slot(table.exponent_flip(j, k), ea, kMantissaBits + k, out + off);
  }
  for (int k = 0; k < kExponentBitCount; ++k, off += 4) {
    encode_slot(table.exponent_flip(p, k), 0, kMantissaBits + k, out + off);
  }
}

std::size_t row_cell_count(const TableFileHeader& h, int i) {
  return (h.flags & 1u) ? static_cast<std::size_t>(static_cast<int>(h.hi) - i + 1)
                        : static_cast<std::size_t>(h.hi - h.lo + 1);
}

}  // namespace

void write_table_file(const ErrorLookupTable& table, const std::string& path, int lo, int hi,
                      bool upper_triangle_only) {
  if (lo < 0 || hi > kMaxFiniteBiased || lo > hi) {
    throw std::invalid_argument("table range must satisfy 0 <= lo <= hi <= 2046");
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open table file for writing: " + path);
  f.write(kTableMagic, 8);
  put_u32(f, 1);
  put_u32(f, upper_triangle_only ? 1u : 0u);
  put_u32(f, static_cast<std::uint32_t>(lo));
  put_u32(f, static_cast<std::uint32_t>(hi));
  std::vector<unsigned char> cell(kCellBytes);
  for (int i = lo; i <= hi; ++i) {
    const int jstart = upper_triangle_only ? i : lo;
    for (int j = jstart; j <= hi; ++j) {
      encode_cell(table, i, j, cell.data());
      f.write(reinterpret_cast<const char*>(cell.data()), static_cast<std::streamsize>(cell.size()));
    }
  }
  if (!f) throw std::runtime_error("short write to table file: " + path);
}

TableFileHeader read_table_file_header(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open table file: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kTableMagic, 8) != 0) {
    throw std::runtime_error("not a table file: " + path);
  }
  TableFileHeader h;
  h.version = get_u32(f);
  h.flags = get_u32(f);
  h.lo = get_u32(f);
  h.hi = get_u32(f);
  if (!f) throw std::runtime_error("truncated table header: " + path);
  return h;
}

std::vector<TableCellSlot> read_table_file_cell(const std::string& path, int i, int j) {
  const TableFileHeader h = read_table_file_header(path);
  if ((h.flags & 1u) && j < i) std::swap(i, j);  // symmetric storage
  if (i < static_cast<int>(h.lo) || j < static_cast<int>(h.lo) || i > static_cast<int>(h.hi) ||
      j > static_cast<int>(h.hi)) {
    throw std::out_of_range("cell outside stored table range");
  }
  std::size_t index = 0;
  for (int row = static_cast<int>(h.lo); row < i; ++row) index += row_cell_count(h, row);
  index += static_cast<std::size_t>(j - ((h.flags & 1u) ? i : static_cast<int>(h.lo)));

  std::ifstream f(path, std::ios::binary);
  f.seekg(static_cast<std::streamoff>(kHeaderBytes + index * kCellBytes));
  std::vector<unsigned char> raw(kCellBytes);
  f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!f) throw std::runtime_error("truncated table file: " + path);
  std::vector<TableCellSlot> slots(kSlotsPerCell);
  for (std::size_t s = 0; s < kSlotsPerCell; ++s) {
    slots[s].kind = raw[s * 4];
    slots[s].bit = raw[s * 4 + 1];
    slots[s].exp2 = static_cast<std::int16_t>(
        static_cast<std::uint16_t>(raw[s * 4 + 2]) |
        (static_cast<std::uint16_t>(raw[s * 4 + 3]) << 8));
  }
  return slots;
}

const char* fault_site_name(FaultSite s) {
  switch (s) {
    case FaultSite::OperandA: return "a";
    case FaultSite::OperandB: return "b";
    case FaultSite::Product: return "c";
  }
  return "?";
}

}  // namespace bitfault
