#ifndef BITFAULT_MONTE_CARLO_HPP
#define BITFAULT_MONTE_CARLO_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bitfault/rng.hpp"

namespace bitfault {

// Exhaustive per-bit fault sweep over random vectors across a magnitude grid.
// Each sample enumerates all 2 * 64 * N operand flips, so per-cell counts are
// deterministic given the seed; the only randomness is the mantissa draw.
struct McConfig {
  int n = 100;               // vector length
  int samples = 1000;        // sample pairs per magnitude cell
  int grid_min = -10;        // inclusive, binade exponents
  int grid_max = 10;
  double failure_threshold = 1.0;  // failure: absolute error strictly greater
  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware concurrency
};

struct McCell {
  int mag_u = 0;
  int mag_v = 0;
  std::uint64_t samples = 0;
  std::uint64_t flips = 0;     // 2 * 64 * n * samples
  std::uint64_t failures = 0;
  std::array<std::uint64_t, 64> per_bit_failures{};

  double probability() const { return flips ? double(failures) / double(flips) : 0.0; }
  // Each bit index is exercised 2 * n times per sample (both vectors).
  double bit_probability(int bit) const {
    const std::uint64_t per_bit_flips = flips / 64;
    return per_bit_flips ? double(per_bit_failures[static_cast<std::size_t>(bit)]) /
                               double(per_bit_flips)
                         : 0.0;
  }
};

struct McSurface {
  McConfig config;
  std::vector<McCell> cells;  // row-major over (mag_u, mag_v)

  int grid_size() const { return config.grid_max - config.grid_min + 1; }
  const McCell& at(int mag_u, int mag_v) const;
};

// Elements carry biased exponent mag_exp + 1023, a uniformly random 52-bit
// mantissa and positive sign, i.e. values in [2^mag, 2^(mag+1)).
std::vector<double> generate_vector(int mag_exp, int n, SplitMix64& rng);

// One magnitude cell; the stream seed derives from (seed, mag_u, mag_v) so
// results do not depend on scheduling.
McCell run_cell(int mag_u, int mag_v, const McConfig& cfg);

McSurface run_surface(const McConfig& cfg);

enum class SliceMode { Diagonal, FixedV };

struct SliceRow {
  int bit = 0;
  int mag = 0;
  std::uint64_t failures = 0;
  std::uint64_t flips = 0;
  double probability = 0.0;
};

// Per-bit failure curves along a slice of the surface: the diagonal
// (mag_u = mag_v) or a fixed v magnitude. Throws if fixed_mag is off-grid.
std::vector<SliceRow> per_bit_slice(const McSurface& surface, SliceMode mode, int fixed_mag = 0);

// Model prediction for one exponent-bit flip at a magnitude pair, evaluated
// at the binade representatives: 1.0 when the flip is guaranteed to exceed
// the unit threshold (or goes non-numeric), else 0.0. Exact for every cell
// where the failure outcome is mantissa-independent.
double predicted_exponent_bit_failure(int mag_u, int mag_v, int word_bit);

// CSV emission, UTF-8 with a header row, probabilities at 17 significant
// digits. Byte-identical across runs and thread counts for a fixed config.
std::string surface_csv(const McSurface& surface);
std::string slice_csv(const std::vector<SliceRow>& rows);

}  // namespace bitfault

#endif
