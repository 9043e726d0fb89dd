#ifndef BITFAULT_GMRES_HPP
#define BITFAULT_GMRES_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "bitfault/dot_fault.hpp"
#include "bitfault/sparse.hpp"

namespace bitfault {

enum class RhsMode { OnesSolution, Random, File };

struct GmresConfig {
  int restart = 25;
  int max_total_iterations = 1000;
  double convergence_rtol = 1e-8;
  bool instrument = true;
  bool count_norm_dots = true;   // line-8 norm tallied as one extra self dot
  bool log_intervals = false;    // per-dot interval audit log (memory heavy)
  bool check_basis = false;      // track MGS basis quality per cycle
  double happy_breakdown_rel = 1e-12;  // h_{j+1,j} <= rel * ||A||_F treated as zero
};

struct IntervalLogEntry {
  int iteration = 0;
  int lo = 0;
  int hi = 0;
  bool contains_zero = false;
  bool self_dot = false;
};

struct GmresReport {
  std::vector<double> residual_history;  // absolute 2-norms, one per inner step
  bool converged = false;
  bool happy_breakdown = false;
  int iterations = 0;
  double final_residual = 0.0;  // explicit ||b - Ax||
  double threshold = 0.0;       // ||A||_2 estimate used for classification
  ErrorClassTally tally;        // cumulative over all instrumented dots
  std::uint64_t instrumented_dots = 0;
  std::vector<IntervalLogEntry> interval_log;
  double max_basis_defect = 0.0;       // max |q_i . q_j - delta_ij| (check_basis)
  double max_normalization_defect = 0.0;  // max | ||q_i|| - 1 |     (check_basis)
};

// Modeling interval for a basis vector of unit 2-norm: its entries lie in
// [-1, 1], so the covering value range [0, 1] is represented by the biased
// exponent of its upper bound 1.0.
ExponentInterval normalized_premise_interval();

// Modeling interval for the vector being orthogonalized. While the data
// honors the normalized range (max |v_i| <= 1) the premise interval above
// applies; once it escapes, the interval comes from the measured extreme
// values (signed min and max), widened by one exponent.
ExponentInterval orthogonalization_operand_interval(std::span<const double> v);

// Tally of every absolute error a single bit flip could inject into one
// orthogonalization dot product q . v, classified against `threshold`.
// Read-only: never perturbs the computation.
ErrorClassTally instrument_dot(std::span<const double> v, const ErrorLookupTable& table,
                               double threshold, bool self_dot = false);

// Least-squares solve of the (j+1) x j upper-Hessenberg system via
// progressive Givens rotations. H is column-major with leading dimension
// rows. Returns y and the residual norm (the rotated rhs tail).
std::pair<std::vector<double>, double> hessenberg_lsq(const std::vector<double>& h, int rows,
                                                      int cols, double beta);

// Restarted GMRES with modified Gram-Schmidt orthogonalization, instrumented
// to count the bit-flip error classes of every orthogonalization dot product.
// x0 = 0. Throws on dimension mismatch; aborts with std::runtime_error if
// un-faulted arithmetic produces Inf/NaN.
GmresReport gmres_solve(const CsrMatrix& a, std::span<const double> b, const GmresConfig& cfg,
                        const ErrorLookupTable& table, double threshold,
                        std::vector<double>* x_out = nullptr);

// Builds the right-hand side for a run: A*ones, a seeded uniform [-1,1)
// vector, or a file of one value per line.
std::vector<double> make_rhs(const CsrMatrix& a, RhsMode mode, std::uint64_t seed,
                             const std::string& path);

}  // namespace bitfault

#endif
