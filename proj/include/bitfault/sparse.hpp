#ifndef BITFAULT_SPARSE_HPP
#define BITFAULT_SPARSE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bitfault {

// Compressed sparse row storage. Explicit zeros are first-class entries:
// they survive I/O, equilibration and SpMV untouched.
struct CsrMatrix {
  std::int64_t n_rows = 0;
  std::int64_t n_cols = 0;
  std::vector<std::int64_t> row_offsets;  // length n_rows + 1, nondecreasing
  std::vector<std::int64_t> col_indices;
  std::vector<double> values;

  std::int64_t nnz() const { return static_cast<std::int64_t>(values.size()); }
  std::int64_t explicit_zeros() const;
};

// Assembles CSR from unordered triplets; entries are sorted by (row, col).
// Throws on out-of-range indices or duplicate entries.
CsrMatrix csr_from_triplets(std::int64_t n_rows, std::int64_t n_cols,
                            std::vector<std::tuple<std::int64_t, std::int64_t, double>> entries);

// 5-point second-order Laplacian on a grid x grid mesh with Dirichlet
// truncation at the boundary: n = grid^2, diagonal 4, off-diagonals -1.
// Symmetric positive definite.
CsrMatrix gen_poisson(int grid);

// Matrix Market coordinate format, real field, general or symmetric
// (symmetric input is expanded to general storage). 1-based ASCII indices.
CsrMatrix read_matrix_market(const std::string& path);
void write_matrix_market(const CsrMatrix& m, const std::string& path);

struct MatrixNorms {
  double inf_norm = 0.0;            // max absolute row sum, exact
  double two_norm_estimate = 0.0;   // power iteration on A^T A
  double frobenius_norm = 0.0;
};

// Power iteration runs to relative residual 1e-6 or 10,000 iterations with a
// fixed-seed start vector; the estimate resolves four significant digits.
MatrixNorms norms(const CsrMatrix& m);

struct EquilibrationScaling {
  std::vector<double> row_scale;  // R, length n_rows
  std::vector<double> col_scale;  // C, length n_cols
};

// Row/column equilibration: R_i = 1/max_j |a_ij|, then C_j = 1/max_i R_i|a_ij|.
// The scaled matrix R A C has unit max-magnitude rows, no fill, and the same
// sparsity pattern (explicit zeros included). The input is not modified.
// Throws std::domain_error naming the first all-zero row or column.
std::pair<CsrMatrix, EquilibrationScaling> equilibrate(const CsrMatrix& m);

// b_i <- R_i * b_i, the right-hand side of the scaled system.
std::vector<double> apply_scaling_to_rhs(std::span<const double> b,
                                         const EquilibrationScaling& s);

// Recovers unknowns of the original system from the scaled solve: x = C .* x_hat.
std::vector<double> unscale_solution(std::span<const double> x_hat,
                                     const EquilibrationScaling& s);

// y = A x, row-sequential deterministic accumulation.
void spmv(const CsrMatrix& m, std::span<const double> x, std::span<double> y);
std::vector<double> spmv(const CsrMatrix& m, std::span<const double> x);

}  // namespace bitfault

#endif
