#include "bitfault/monte_carlo.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "bitfault/float_anatomy.hpp"
#include "bitfault/scalar_fault.hpp"

namespace bitfault {

const McCell& McSurface::at(int mag_u, int mag_v) const {
  if (mag_u < config.grid_min || mag_u > config.grid_max || mag_v < config.grid_min ||
      mag_v > config.grid_max) {
    throw std::out_of_range("magnitude outside surface grid");
  }
  const std::size_t g = static_cast<std::size_t>(grid_size());
  return cells[static_cast<std::size_t>(mag_u - config.grid_min) * g +
               static_cast<std::size_t>(mag_v - config.grid_min)];
}

std::vector<double> generate_vector(int mag_exp, int n, SplitMix64& rng) {
  const int biased = mag_exp + kExponentBias;
  if (biased < 1 || biased > kMaxFiniteBiased) {
    throw std::domain_error("magnitude outside the normal range");
  }
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) {
    const std::uint64_t mantissa = rng.next() & ((1ULL << kMantissaBits) - 1);
    x = from_bits((static_cast<std::uint64_t>(biased) << kMantissaBits) | mantissa);
  }
  return v;
}

namespace {

// Flip failures for every bit of every element of `target`, with `other` as
// the co-factor. The injected error is |t - t~| * |o|; Inf and NaN perturbed
// values count as failures (their absolute error is undefined and large).
void sweep_vector(const std::vector<double>& target, const std::vector<double>& other,
                  double threshold, McCell& cell) {
  for (std::size_t i = 0; i < target.size(); ++i) {
    const std::uint64_t bits = to_bits(target[i]);
    const double o = other[i];
    for (int bit = 0; bit < 64; ++bit) {
      const double flipped = from_bits(bits ^ (1ULL << bit));
      const double err = std::fabs(target[i] - flipped) * o;
      if (!(err <= threshold)) {  // catches > threshold, Inf and NaN
        ++cell.failures;
        ++cell.per_bit_failures[static_cast<std::size_t>(bit)];
      }
    }
  }
}

}  // namespace

McCell run_cell(int mag_u, int mag_v, const McConfig& cfg) {
  if (cfg.n < 1 || cfg.samples < 1) throw std::invalid_argument("n and samples must be >= 1");
  McCell cell;
  cell.mag_u = mag_u;
  cell.mag_v = mag_v;
  cell.samples = static_cast<std::uint64_t>(cfg.samples);
  // Seed and draw order depend only on the unordered magnitude pair, so the
  // surface is exactly symmetric under swapping the axes.
  const int lo = std::min(mag_u, mag_v);
  const int hi = std::max(mag_u, mag_v);
  SplitMix64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(lo + 4096),
                             static_cast<std::uint64_t>(hi + 4096)));
  for (int s = 0; s < cfg.samples; ++s) {
    const std::vector<double> first = generate_vector(lo, cfg.n, rng);
    const std::vector<double> second = generate_vector(hi, cfg.n, rng);
    const std::vector<double>& u = mag_u == lo ? first : second;
    const std::vector<double>& v = mag_u == lo ? second : first;
    sweep_vector(u, v, cfg.failure_threshold, cell);
    sweep_vector(v, u, cfg.failure_threshold, cell);
  }
  cell.flips = 2ULL * 64ULL * static_cast<std::uint64_t>(cfg.n) *
               static_cast<std::uint64_t>(cfg.samples);
  return cell;
}

McSurface run_surface(const McConfig& cfg) {
  if (cfg.grid_min > cfg.grid_max) throw std::invalid_argument("empty magnitude grid");
  McSurface surface;
  surface.config = cfg;
  const int g = cfg.grid_max - cfg.grid_min + 1;
  surface.cells.resize(static_cast<std::size_t>(g) * static_cast<std::size_t>(g));

  unsigned threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(surface.cells.size()));
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      for (std::size_t idx = t; idx < surface.cells.size(); idx += threads) {
        const int mu = cfg.grid_min + static_cast<int>(idx) / g;
        const int mv = cfg.grid_min + static_cast<int>(idx) % g;
        surface.cells[idx] = run_cell(mu, mv, cfg);
      }
    });
  }
  for (auto& th : pool) th.join();
  return surface;
}

std::vector<SliceRow> per_bit_slice(const McSurface& surface, SliceMode mode, int fixed_mag) {
  const McConfig& cfg = surface.config;
  if (mode == SliceMode::FixedV && (fixed_mag < cfg.grid_min || fixed_mag > cfg.grid_max)) {
    throw std::out_of_range("fixed magnitude outside surface grid");
  }
  std::vector<SliceRow> rows;
  rows.reserve(64u * static_cast<std::size_t>(surface.grid_size()));
  for (int bit = 0; bit < 64; ++bit) {
    for (int mag = cfg.grid_min; mag <= cfg.grid_max; ++mag) {
      const McCell& cell = mode == SliceMode::Diagonal ? surface.at(mag, mag)
                                                       : surface.at(mag, fixed_mag);
      SliceRow r;
      r.bit = bit;
      r.mag = mag;
      r.flips = cell.flips / 64;
      r.failures = cell.per_bit_failures[static_cast<std::size_t>(bit)];
      r.probability = r.flips ? double(r.failures) / double(r.flips) : 0.0;
      rows.push_back(r);
    }
  }
  return rows;
}

double predicted_exponent_bit_failure(int mag_u, int mag_v, int word_bit) {
  if (bit_region(word_bit) != BitRegion::Exponent) {
    throw std::invalid_argument("prediction covers exponent bits only");
  }
  const double rep = std::ldexp(1.0, mag_u);
  const PerturbationRecord p = perturb_one(rep, word_bit);
  if (p.outcome == FaultOutcome::NonNumeric) return 1.0;
  const ScaledPow2 err = p.abs_error.scaled_by_pow2(mag_v);
  return err.less_than(1.0) ? 0.0 : 1.0;
}

namespace {

void append_probability(std::string& out, double p) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", p);
  out += buf;
}

}  // namespace

std::string surface_csv(const McSurface& surface) {
  std::string out = "mag_u,mag_v,samples,failures,probability\n";
  for (const McCell& c : surface.cells) {
    out += std::to_string(c.mag_u) + ',' + std::to_string(c.mag_v) + ',' +
           std::to_string(c.samples) + ',' + std::to_string(c.failures) + ',';
    append_probability(out, c.probability());
    out += '\n';
  }
  return out;
}

std::string slice_csv(const std::vector<SliceRow>& rows) {
  std::string out = "bit,mag,failures,probability\n";
  for (const SliceRow& r : rows) {
    out += std::to_string(r.bit) + ',' + std::to_string(r.mag) + ',' +
           std::to_string(r.failures) + ',';
    append_probability(out, r.probability);
    out += '\n';
  }
  return out;
}

}  // namespace bitfault
