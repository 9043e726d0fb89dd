#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <vector>

#include "bitfault/gmres.hpp"
#include "bitfault/rng.hpp"

using namespace bitfault;

namespace {

CsrMatrix identity(std::int64_t n) {
  std::vector<std::tuple<std::int64_t, std::int64_t, double>> tr;
  for (std::int64_t i = 0; i < n; ++i) tr.emplace_back(i, i, 1.0);
  return csr_from_triplets(n, n, tr);
}

// Dense normal-equations oracle for the small least-squares solves:
// (H^T H) y = H^T rhs via Gaussian elimination with partial pivoting.
std::vector<double> normal_equations_lsq(const std::vector<double>& h, int rows, int cols,
                                         double beta) {
  auto H = [&](int i, int j) { return h[size_t(j) * size_t(rows) + size_t(i)]; };
  std::vector<double> m(size_t(cols) * size_t(cols), 0.0);
  std::vector<double> rhs(size_t(cols), 0.0);
  for (int i = 0; i < cols; ++i) {
    for (int j = 0; j < cols; ++j) {
      double s = 0.0;
      for (int k = 0; k < rows; ++k) s += H(k, i) * H(k, j);
      m[size_t(i) * size_t(cols) + size_t(j)] = s;
    }
    rhs[size_t(i)] = H(0, i) * beta;  // rhs vector is beta * e_1
  }
  for (int col = 0; col < cols; ++col) {
    int piv = col;
    for (int r = col + 1; r < cols; ++r) {
      if (std::fabs(m[size_t(r) * size_t(cols) + size_t(col)]) >
          std::fabs(m[size_t(piv) * size_t(cols) + size_t(col)])) {
        piv = r;
      }
    }
    for (int c = 0; c < cols; ++c) {
      std::swap(m[size_t(col) * size_t(cols) + size_t(c)], m[size_t(piv) * size_t(cols) + size_t(c)]);
    }
    std::swap(rhs[size_t(col)], rhs[size_t(piv)]);
    for (int r = col + 1; r < cols; ++r) {
      const double f = m[size_t(r) * size_t(cols) + size_t(col)] /
                       m[size_t(col) * size_t(cols) + size_t(col)];
      for (int c = col; c < cols; ++c) {
        m[size_t(r) * size_t(cols) + size_t(c)] -= f * m[size_t(col) * size_t(cols) + size_t(c)];
      }
      rhs[size_t(r)] -= f * rhs[size_t(col)];
    }
  }
  std::vector<double> y(size_t(cols), 0.0);
  for (int r = cols - 1; r >= 0; --r) {
    double s = rhs[size_t(r)];
    for (int c = r + 1; c < cols; ++c) s -= m[size_t(r) * size_t(cols) + size_t(c)] * y[size_t(c)];
    y[size_t(r)] = s / m[size_t(r) * size_t(cols) + size_t(r)];
  }
  return y;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("hessenberg least squares") {
  // 2x1 system [2; 0] y = [4; 0]: y = 2, residual 0.
  {
    const std::vector<double> h{2.0, 0.0};
    const auto [y, res] = hessenberg_lsq(h, 2, 1, 4.0);
    CHECK(y.size() == 1);
    CHECK(y[0] == doctest::Approx(2.0));
    CHECK(res == doctest::Approx(0.0));
  }
  // Random 6x5 Hessenberg vs the dense normal-equations oracle.
  SplitMix64 rng(88);
  for (int trial = 0; trial < 50; ++trial) {
    const int cols = 5, rows = 6;
    std::vector<double> h(size_t(rows) * size_t(cols), 0.0);
    for (int j = 0; j < cols; ++j) {
      for (int i = 0; i <= j + 1; ++i) {
        h[size_t(j) * size_t(rows) + size_t(i)] = 2.0 * rng.next_unit() - 1.0;
      }
      // keep the subdiagonal well away from zero
      h[size_t(j) * size_t(rows) + size_t(j) + 1] += 2.0;
    }
    const double beta = 1.0 + rng.next_unit();
    const auto [y, res] = hessenberg_lsq(h, rows, cols, beta);
    const std::vector<double> y_ref = normal_equations_lsq(h, rows, cols, beta);
    for (int i = 0; i < cols; ++i) {
      CHECK(y[size_t(i)] == doctest::Approx(y_ref[size_t(i)]).epsilon(1e-10));
    }
    // Residual from the rotations equals the explicit residual norm.
    std::vector<double> r(size_t(rows), 0.0);
    r[0] = beta;
    for (int j = 0; j < cols; ++j) {
      for (int i = 0; i < rows; ++i) {
        r[size_t(i)] -= h[size_t(j) * size_t(rows) + size_t(i)] * y[size_t(j)];
      }
    }
    CHECK(res == doctest::Approx(norm2(r)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(hessenberg_lsq(std::vector<double>{1.0}, 1, 1, 1.0), std::invalid_argument);
}

TEST_CASE("identity system converges immediately") {
  const CsrMatrix eye = identity(7);
  const std::vector<double> b{1, 2, 3, 4, 5, 6, 7};
  const ErrorLookupTable table = ErrorLookupTable::build();
  GmresConfig cfg;
  cfg.instrument = false;
  std::vector<double> x;
  const GmresReport rep = gmres_solve(eye, b, cfg, table, 1.0 + 1e-9, &x);
  CHECK(rep.converged);
  CHECK(rep.iterations <= 2);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(x[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("poisson solve recovers the constructed solution") {
  const CsrMatrix a = gen_poisson(16);
  const std::vector<double> ones(size_t(a.n_cols), 1.0);
  const std::vector<double> b = spmv(a, ones);
  const ErrorLookupTable table = ErrorLookupTable::build();
  GmresConfig cfg;
  cfg.restart = 25;
  cfg.max_total_iterations = 1000;
  cfg.convergence_rtol = 1e-10;
  cfg.check_basis = true;
  std::vector<double> x;
  const GmresReport rep = gmres_solve(a, b, cfg, table, norms(a).two_norm_estimate, &x);
  CHECK(rep.converged);
  double worst = 0.0;
  for (double xi : x) worst = std::max(worst, std::fabs(xi - 1.0));
  CHECK(worst < 1e-6);
  CHECK(rep.max_basis_defect < 1e-8);
  CHECK(rep.max_normalization_defect < 1e-12);
  // The rotation-based residual estimates agree with the explicit residual.
  CHECK(rep.final_residual <= 1e-10 * norm2(b));
}

TEST_CASE("residual history is non-increasing within a restart cycle") {
  const CsrMatrix a = gen_poisson(10);
  const std::vector<double> ones(size_t(a.n_cols), 1.0);
  const std::vector<double> b = spmv(a, ones);
  const ErrorLookupTable table = ErrorLookupTable::build();
  GmresConfig cfg;
  cfg.restart = 30;
  cfg.max_total_iterations = 90;
  cfg.convergence_rtol = 1e-14;  // force several cycles
  cfg.instrument = false;
  const GmresReport rep = gmres_solve(a, b, cfg, table, 8.0);
  int upticks = 0;
  for (std::size_t i = 1; i < rep.residual_history.size(); ++i) {
    if (rep.residual_history[i] > rep.residual_history[i - 1] * (1.0 + 1e-12)) ++upticks;
  }
  // The only allowed increases are the explicit recomputations at restarts.
  CHECK(upticks <= 3);
}

TEST_CASE("happy breakdown on a one-dimensional Krylov space") {
  const CsrMatrix eye = identity(5);
  std::vector<double> b(5, 0.0);
  b[2] = 3.0;  // A b = b: the Krylov space closes after one vector
  const ErrorLookupTable table = ErrorLookupTable::build();
  GmresConfig cfg;
  cfg.instrument = false;
  cfg.convergence_rtol = 1e-30;  // unreachable: termination must come from the breakdown
  std::vector<double> x;
  const GmresReport rep = gmres_solve(eye, b, cfg, table, 2.0, &x);
  CHECK(rep.happy_breakdown);
  for (std::size_t i = 0; i < 5; ++i) CHECK(x[i] == doctest::Approx(b[i]).epsilon(1e-14));
}

TEST_CASE("instrumentation does not interfere with the solve") {
  const CsrMatrix a = gen_poisson(12);
  const std::vector<double> ones(size_t(a.n_cols), 1.0);
  const std::vector<double> b = spmv(a, ones);
  const ErrorLookupTable table = ErrorLookupTable::build();
  GmresConfig on, off;
  on.instrument = true;
  off.instrument = false;
  on.max_total_iterations = off.max_total_iterations = 200;
  std::vector<double> x_on, x_off;
  const GmresReport rep_on = gmres_solve(a, b, on, table, 8.0, &x_on);
  const GmresReport rep_off = gmres_solve(a, b, off, table, 8.0, &x_off);
  REQUIRE(rep_on.residual_history.size() == rep_off.residual_history.size());
  for (std::size_t i = 0; i < rep_on.residual_history.size(); ++i) {
    CHECK(rep_on.residual_history[i] == rep_off.residual_history[i]);  // bitwise
  }
  for (std::size_t i = 0; i < x_on.size(); ++i) CHECK(x_on[i] == x_off[i]);
  CHECK(rep_on.tally.total() > 0);
  CHECK(rep_off.tally.total() == 0);
}

TEST_CASE("instrumented dot tallies follow the normalized premise") {
  const ErrorLookupTable table = ErrorLookupTable::build();
  // All |v_i| in [0.5, 1): the modeled pair is the unit-binade cell, and with
  // any threshold beyond 4 nothing can land in the grey area.
  std::vector<double> v;
  SplitMix64 rng(15);
  for (int i = 0; i < 64; ++i) v.push_back(0.5 + 0.499 * rng.next_unit());
  const ErrorClassTally t = instrument_dot(v, table, 5.0);
  CHECK(t.class2_grey == 0);
  CHECK(t.total() == 33);
  CHECK(t.class4_nonnumeric == 3);

  // Data escaping the normalized range falls back to the measured signed
  // extremes: -3.75 (biased 1024) and the largest positive entry (~0.999,
  // biased 1022), widened to [1022, 1025].
  std::vector<double> big = v;
  big[10] = -3.75;
  const ExponentInterval iv = orthogonalization_operand_interval(big);
  CHECK(iv.lo == 1022);
  CHECK(iv.hi == 1025);
  const ErrorClassTally tb = instrument_dot(big, table, 5.0);
  CHECK(tb.total() == 4 * 33);  // premise side {1023} times four v exponents
}

TEST_CASE("solving the equilibrated system recovers the original unknowns") {
  const CsrMatrix a = gen_poisson(16);
  const std::vector<double> ones(size_t(a.n_cols), 1.0);
  const std::vector<double> b = spmv(a, ones);
  const ErrorLookupTable table = ErrorLookupTable::build();
  GmresConfig cfg;
  cfg.restart = 25;
  cfg.max_total_iterations = 2000;
  cfg.convergence_rtol = 1e-10;
  cfg.instrument = false;

  std::vector<double> x_direct;
  REQUIRE(gmres_solve(a, b, cfg, table, 8.0, &x_direct).converged);

  const auto [scaled, s] = equilibrate(a);
  const std::vector<double> b_scaled = apply_scaling_to_rhs(b, s);
  std::vector<double> x_hat;
  REQUIRE(gmres_solve(scaled, b_scaled, cfg, table, 2.0, &x_hat).converged);
  const std::vector<double> x_unscaled = unscale_solution(x_hat, s);
  for (std::size_t i = 0; i < x_direct.size(); ++i) {
    CHECK(x_unscaled[i] == doctest::Approx(x_direct[i]).epsilon(1e-7));
    CHECK(x_unscaled[i] == doctest::Approx(1.0).epsilon(1e-7));
  }
}

TEST_CASE("rhs construction modes") {
  const CsrMatrix a = gen_poisson(3);
  const std::vector<double> ones_rhs = make_rhs(a, RhsMode::OnesSolution, 0, "");
  const std::vector<double> ones(size_t(a.n_cols), 1.0);
  CHECK(ones_rhs == spmv(a, ones));

  const std::vector<double> r1 = make_rhs(a, RhsMode::Random, 33, "");
  const std::vector<double> r2 = make_rhs(a, RhsMode::Random, 33, "");
  CHECK(r1 == r2);
  for (double x : r1) {
    CHECK(x >= -1.0);
    CHECK(x < 1.0);
  }

  std::FILE* f = std::fopen("rhs_test.txt", "w");
  for (int i = 0; i < 9; ++i) std::fprintf(f, "%d.5\n", i);
  std::fclose(f);
  const std::vector<double> rf = make_rhs(a, RhsMode::File, 0, "rhs_test.txt");
  CHECK(rf[0] == 0.5);
  CHECK(rf[8] == 8.5);
  std::remove("rhs_test.txt");
}

TEST_CASE("dimension and argument validation") {
  const CsrMatrix a = gen_poisson(3);
  const ErrorLookupTable table = ErrorLookupTable::build();
  GmresConfig cfg;
  const std::vector<double> wrong(4, 1.0);
  CHECK_THROWS_AS(static_cast<void>(gmres_solve(a, wrong, cfg, table, 8.0)),
                  std::invalid_argument);
  CsrMatrix rect;
  rect.n_rows = 2;
  rect.n_cols = 3;
  rect.row_offsets = {0, 0, 0};
  const std::vector<double> b2(2, 1.0);
  CHECK_THROWS_AS(static_cast<void>(gmres_solve(rect, b2, cfg, table, 8.0)),
                  std::invalid_argument);
}
