#include "bitfault/sparse.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "bitfault/rng.hpp"

namespace bitfault {

std::int64_t CsrMatrix::explicit_zeros() const {
  std::int64_t n = 0;
  for (double v : values) {
    if (v == 0.0) ++n;
  }
  return n;
}

CsrMatrix csr_from_triplets(std::int64_t n_rows, std::int64_t n_cols,
                            std::vector<std::tuple<std::int64_t, std::int64_t, double>> entries) {
  for (const auto& [r, c, v] : entries) {
    (void)v;
    if (r < 0 || r >= n_rows || c < 0 || c >= n_cols) {
      throw std::out_of_range("matrix entry index out of bounds");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (std::get<0>(entries[i]) == std::get<0>(entries[i - 1]) &&
        std::get<1>(entries[i]) == std::get<1>(entries[i - 1])) {
      throw std::invalid_argument("duplicate matrix entry");
    }
  }
  CsrMatrix m;
  m.n_rows = n_rows;
  m.n_cols = n_cols;
  m.row_offsets.assign(static_cast<std::size_t>(n_rows) + 1, 0);
  m.col_indices.reserve(entries.size());
  m.values.reserve(entries.size());
  for (const auto& [r, c, v] : entries) {
    ++m.row_offsets[static_cast<std::size_t>(r) + 1];
    m.col_indices.push_back(c);
    m.values.push_back(v);
  }
  for (std::size_t i = 1; i < m.row_offsets.size(); ++i) m.row_offsets[i] += m.row_offsets[i - 1];
  return m;
}

CsrMatrix gen_poisson(int grid) {
  if (grid < 2) throw std::invalid_argument("gen_poisson requires grid >= 2");
  const std::int64_t n = static_cast<std::int64_t>(grid) * grid;
  CsrMatrix m;
  m.n_rows = n;
  m.n_cols = n;
  m.row_offsets.reserve(static_cast<std::size_t>(n) + 1);
  m.row_offsets.push_back(0);
  m.col_indices.reserve(static_cast<std::size_t>(5 * n));
  m.values.reserve(static_cast<std::size_t>(5 * n));
  auto push = [&m](std::int64_t col, double v) {
    m.col_indices.push_back(col);
    m.values.push_back(v);
  };
  for (int row = 0; row < grid; ++row) {
    for (int col = 0; col < grid; ++col) {
      const std::int64_t idx = static_cast<std::int64_t>(row) * grid + col;
      if (row > 0) push(idx - grid, -1.0);
      if (col > 0) push(idx - 1, -1.0);
      push(idx, 4.0);
      if (col < grid - 1) push(idx + 1, -1.0);
      if (row < grid - 1) push(idx + grid, -1.0);
      m.row_offsets.push_back(static_cast<std::int64_t>(m.values.size()));
    }
  }
  return m;
}

// -------------------------------------------------------------------------
// Matrix Market I/O
// -------------------------------------------------------------------------

CsrMatrix read_matrix_market(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open matrix file: " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty matrix file: " + path);
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate") {
    throw std::runtime_error("malformed Matrix Market header: " + path);
  }
  if (field != "real") throw std::runtime_error("unsupported field (need real): " + path);
  const bool symmetric = symmetry == "symmetric";
  if (!symmetric && symmetry != "general") {
    throw std::runtime_error("unsupported symmetry (need general or symmetric): " + path);
  }

  while (std::getline(f, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::int64_t rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream sizes(line);
    if (!(sizes >> rows >> cols >> nnz) || rows <= 0 || cols <= 0 || nnz < 0) {
      throw std::runtime_error("malformed size line: " + path);
    }
  }
  std::vector<std::tuple<std::int64_t, std::int64_t, double>> entries;
  entries.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
  for (std::int64_t k = 0; k < nnz; ++k) {
    std::int64_t r = 0, c = 0;
    double v = 0.0;
    if (!(f >> r >> c >> v)) throw std::runtime_error("truncated entry list: " + path);
    if (r < 1 || r > rows || c < 1 || c > cols) {
      throw std::runtime_error("entry index out of bounds: " + path);
    }
    entries.emplace_back(r - 1, c - 1, v);
    if (symmetric && r != c) entries.emplace_back(c - 1, r - 1, v);
  }
  return csr_from_triplets(rows, cols, std::move(entries));
}

namespace {

// Shortest decimal rendering that parses back to the identical bits.
std::string shortest_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_matrix_market(const CsrMatrix& m, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open matrix file for writing: " + path);
  f << "%%MatrixMarket matrix coordinate real general\n";
  f << m.n_rows << ' ' << m.n_cols << ' ' << m.nnz() << '\n';
  for (std::int64_t r = 0; r < m.n_rows; ++r) {
    for (std::int64_t k = m.row_offsets[static_cast<std::size_t>(r)];
         k < m.row_offsets[static_cast<std::size_t>(r) + 1]; ++k) {
      f << (r + 1) << ' ' << (m.col_indices[static_cast<std::size_t>(k)] + 1) << ' '
        << shortest_double(m.values[static_cast<std::size_t>(k)]) << '\n';
    }
  }
  if (!f) throw std::runtime_error("short write to matrix file: " + path);
}

// -------------------------------------------------------------------------
// Norms
// -------------------------------------------------------------------------

void spmv(const CsrMatrix& m, std::span<const double> x, std::span<double> y) {
  if (static_cast<std::int64_t>(x.size()) != m.n_cols ||
      static_cast<std::int64_t>(y.size()) != m.n_rows) {
    throw std::invalid_argument("spmv dimension mismatch");
  }
  for (std::int64_t r = 0; r < m.n_rows; ++r) {
    double acc = 0.0;
    for (std::int64_t k = m.row_offsets[static_cast<std::size_t>(r)];
         k < m.row_offsets[static_cast<std::size_t>(r) + 1]; ++k) {
      acc += m.values[static_cast<std::size_t>(k)] *
             x[static_cast<std::size_t>(m.col_indices[static_cast<std::size_t>(k)])];
    }
    y[static_cast<std::size_t>(r)] = acc;
  }
}

std::vector<double> spmv(const CsrMatrix& m, std::span<const double> x) {
  std::vector<double> y(static_cast<std::size_t>(m.n_rows));
  spmv(m, x, y);
  return y;
}

namespace {

void spmv_transpose(const CsrMatrix& m, std::span<const double> y, std::span<double> z) {
  std::fill(z.begin(), z.end(), 0.0);
  for (std::int64_t r = 0; r < m.n_rows; ++r) {
    const double yr = y[static_cast<std::size_t>(r)];
    for (std::int64_t k = m.row_offsets[static_cast<std::size_t>(r)];
         k < m.row_offsets[static_cast<std::size_t>(r) + 1]; ++k) {
      z[static_cast<std::size_t>(m.col_indices[static_cast<std::size_t>(k)])] +=
          m.values[static_cast<std::size_t>(k)] * yr;
    }
  }
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

MatrixNorms norms(const CsrMatrix& m) {
  if (m.n_rows == 0 || m.n_cols == 0) throw std::invalid_argument("norms of an empty matrix");
  MatrixNorms out;
  double fro2 = 0.0;
  for (std::int64_t r = 0; r < m.n_rows; ++r) {
    double rowsum = 0.0;
    for (std::int64_t k = m.row_offsets[static_cast<std::size_t>(r)];
         k < m.row_offsets[static_cast<std::size_t>(r) + 1]; ++k) {
      const double a = std::fabs(m.values[static_cast<std::size_t>(k)]);
      rowsum += a;
      fro2 += a * a;
    }
    out.inf_norm = std::max(out.inf_norm, rowsum);
  }
  out.frobenius_norm = std::sqrt(fro2);

  // Power iteration on B = A^T A. The stopping rule is the residual
  // ||Bx - rho x|| <= tol * rho; the Rayleigh error is then quadratically
  // small, which the 4-digit norm checks need (successive-change tests stall
  // long before that on clustered spectra).
  const std::size_t nc = static_cast<std::size_t>(m.n_cols);
  std::vector<double> x(nc), ax(static_cast<std::size_t>(m.n_rows)), bx(nc);
  SplitMix64 rng(0x5eed5eedULL);
  for (double& xi : x) xi = rng.next_unit() - 0.5;
  double xn = norm2(x);
  for (double& xi : x) xi /= xn;

  double sigma = 0.0;
  const double tol = 1e-6;
  const int max_iters = 10000;
  for (int it = 0; it < max_iters; ++it) {
    spmv(m, x, ax);
    spmv_transpose(m, ax, bx);
    double rho = 0.0;
    for (std::size_t i = 0; i < nc; ++i) rho += x[i] * bx[i];  // = ||Ax||^2
    sigma = std::sqrt(std::max(rho, 0.0));
    double resid2 = 0.0;
    for (std::size_t i = 0; i < nc; ++i) {
      const double d = bx[i] - rho * x[i];
      resid2 += d * d;
    }
    if (rho == 0.0 || std::sqrt(resid2) <= tol * rho) break;
    const double bn = norm2(bx);
    for (std::size_t i = 0; i < nc; ++i) x[i] = bx[i] / bn;
  }
  out.two_norm_estimate = sigma;
  return out;
}

// -------------------------------------------------------------------------
// Equilibration
// -------------------------------------------------------------------------

std::pair<CsrMatrix, EquilibrationScaling> equilibrate(const CsrMatrix& m) {
  EquilibrationScaling s;
  s.row_scale.assign(static_cast<std::size_t>(m.n_rows), 0.0);
  s.col_scale.assign(static_cast<std::size_t>(m.n_cols), 0.0);

  for (std::int64_t r = 0; r < m.n_rows; ++r) {
    double rowmax = 0.0;
    for (std::int64_t k = m.row_offsets[static_cast<std::size_t>(r)];
         k < m.row_offsets[static_cast<std::size_t>(r) + 1]; ++k) {
      rowmax = std::max(rowmax, std::fabs(m.values[static_cast<std::size_t>(k)]));
    }
    if (rowmax == 0.0) {
      throw std::domain_error("equilibrate: row " + std::to_string(r) + " is zero");
    }
    s.row_scale[static_cast<std::size_t>(r)] = 1.0 / rowmax;
  }

  std::vector<double> colmax(static_cast<std::size_t>(m.n_cols), 0.0);
  for (std::int64_t r = 0; r < m.n_rows; ++r) {
    const double ri = s.row_scale[static_cast<std::size_t>(r)];
    for (std::int64_t k = m.row_offsets[static_cast<std::size_t>(r)];
         k < m.row_offsets[static_cast<std::size_t>(r) + 1]; ++k) {
      const std::size_t c = static_cast<std::size_t>(m.col_indices[static_cast<std::size_t>(k)]);
      colmax[c] = std::max(colmax[c], ri * std::fabs(m.values[static_cast<std::size_t>(k)]));
    }
  }
  for (std::int64_t c = 0; c < m.n_cols; ++c) {
    if (colmax[static_cast<std::size_t>(c)] == 0.0) {
      throw std::domain_error("equilibrate: column " + std::to_string(c) + " is zero");
    }
    s.col_scale[static_cast<std::size_t>(c)] = 1.0 / colmax[static_cast<std::size_t>(c)];
  }

  CsrMatrix scaled = m;
  for (std::int64_t r = 0; r < m.n_rows; ++r) {
    const double ri = s.row_scale[static_cast<std::size_t>(r)];
    for (std::int64_t k = m.row_offsets[static_cast<std::size_t>(r)];
         k < m.row_offsets[static_cast<std::size_t>(r) + 1]; ++k) {
      const std::size_t idx = static_cast<std::size_t>(k);
      scaled.values[idx] =
          ri * m.values[idx] * s.col_scale[static_cast<std::size_t>(m.col_indices[idx])];
    }
  }
  return {std::move(scaled), std::move(s)};
}

std::vector<double> apply_scaling_to_rhs(std::span<const double> b,
                                         const EquilibrationScaling& s) {
  if (b.size() != s.row_scale.size()) {
    throw std::invalid_argument("apply_scaling_to_rhs length mismatch");
  }
  std::vector<double> out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = s.row_scale[i] * b[i];
  return out;
}

std::vector<double> unscale_solution(std::span<const double> x_hat,
                                     const EquilibrationScaling& s) {
  if (x_hat.size() != s.col_scale.size()) {
    throw std::invalid_argument("unscale_solution length mismatch");
  }
  std::vector<double> out(x_hat.size());
  for (std::size_t i = 0; i < x_hat.size(); ++i) out[i] = s.col_scale[i] * x_hat[i];
  return out;
}

}  // namespace bitfault
