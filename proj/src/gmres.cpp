#include "bitfault/gmres.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "bitfault/rng.hpp"

namespace bitfault {

ExponentInterval normalized_premise_interval() {
  return ExponentInterval::single(kExponentBias);  // values in (0, 1], bound 1.0 = 2^0
}

ExponentInterval orthogonalization_operand_interval(std::span<const double> v) {
  double lo_val = 0.0, hi_val = 0.0;
  bool contains_zero = false;
  for (double x : v) {
    if (!std::isfinite(x)) throw std::domain_error("non-finite vector element");
    lo_val = std::min(lo_val, x);
    hi_val = std::max(hi_val, x);
    if (x == 0.0 || decompose(x).kind == ValueKind::Subnormal) contains_zero = true;
  }
  const double mag = std::max(std::fabs(lo_val), std::fabs(hi_val));
  if (mag == 0.0) {
    ExponentInterval degenerate;
    degenerate.contains_zero = true;
    return degenerate;
  }
  if (mag <= 1.0) {
    ExponentInterval iv = normalized_premise_interval();
    iv.contains_zero = contains_zero;
    return iv;
  }
  // Escaped the normalized range: model the measured extremes, widened.
  int e_lo = kMaxFiniteBiased, e_hi = 1;
  for (double endpoint : {lo_val, hi_val}) {
    if (endpoint == 0.0) continue;
    const FloatAnatomy a = decompose(std::fabs(endpoint));
    if (a.kind != ValueKind::Normal) continue;
    e_lo = std::min(e_lo, a.biased_exponent);
    e_hi = std::max(e_hi, a.biased_exponent);
  }
  ExponentInterval iv = ExponentInterval::range(std::max(e_lo, 1),
                                                std::min(e_hi + 1, kMaxFiniteBiased));
  iv.contains_zero = contains_zero;
  return iv;
}

ErrorClassTally instrument_dot(std::span<const double> v, const ErrorLookupTable& table,
                               double threshold, bool self_dot) {
  const ExponentInterval vi = orthogonalization_operand_interval(v);
  const ExponentInterval qi = self_dot ? vi : normalized_premise_interval();
  return classify_errors(qi, vi, table, threshold);
}

std::pair<std::vector<double>, double> hessenberg_lsq(const std::vector<double>& h, int rows,
                                                      int cols, double beta) {
  if (rows != cols + 1 || static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) >
                              h.size()) {
    throw std::invalid_argument("hessenberg_lsq expects a (j+1) x j system");
  }
  std::vector<double> r = h;  // rotated in place, column-major, ld = rows
  std::vector<double> g(static_cast<std::size_t>(rows), 0.0);
  g[0] = beta;
  std::vector<double> cs(static_cast<std::size_t>(cols)), sn(static_cast<std::size_t>(cols));
  auto at = [&r, rows](int i, int j) -> double& {
    return r[static_cast<std::size_t>(j) * static_cast<std::size_t>(rows) +
             static_cast<std::size_t>(i)];
  };
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < j; ++i) {
      const double t = cs[static_cast<std::size_t>(i)] * at(i, j) +
                       sn[static_cast<std::size_t>(i)] * at(i + 1, j);
      at(i + 1, j) = -sn[static_cast<std::size_t>(i)] * at(i, j) +
                     cs[static_cast<std::size_t>(i)] * at(i + 1, j);
      at(i, j) = t;
    }
    const double a = at(j, j), b = at(j + 1, j);
    const double denom = std::hypot(a, b);
    if (denom == 0.0) {
      cs[static_cast<std::size_t>(j)] = 1.0;
      sn[static_cast<std::size_t>(j)] = 0.0;
    } else {
      cs[static_cast<std::size_t>(j)] = a / denom;
      sn[static_cast<std::size_t>(j)] = b / denom;
    }
    at(j, j) = cs[static_cast<std::size_t>(j)] * a + sn[static_cast<std::size_t>(j)] * b;
    at(j + 1, j) = 0.0;
    const double gj = cs[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
    g[static_cast<std::size_t>(j) + 1] =
        -sn[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
    g[static_cast<std::size_t>(j)] = gj;
  }
  std::vector<double> y(static_cast<std::size_t>(cols), 0.0);
  for (int i = cols - 1; i >= 0; --i) {
    double s = g[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < cols; ++k) s -= at(i, k) * y[static_cast<std::size_t>(k)];
    if (at(i, i) == 0.0) throw std::runtime_error("hessenberg_lsq: singular triangular factor");
    y[static_cast<std::size_t>(i)] = s / at(i, i);
  }
  return {std::move(y), std::fabs(g[static_cast<std::size_t>(cols)])};
}

namespace {

double vec_norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

GmresReport gmres_solve(const CsrMatrix& a, std::span<const double> b, const GmresConfig& cfg,
                        const ErrorLookupTable& table, double threshold,
                        std::vector<double>* x_out) {
  if (a.n_rows != a.n_cols) throw std::invalid_argument("gmres_solve requires a square matrix");
  if (static_cast<std::int64_t>(b.size()) != a.n_rows) {
    throw std::invalid_argument("gmres_solve rhs length mismatch");
  }
  if (cfg.restart < 1 || cfg.max_total_iterations < 1) {
    throw std::invalid_argument("restart and iteration cap must be positive");
  }
  const std::size_t n = b.size();
  const int m = cfg.restart;

  GmresReport report;
  report.threshold = threshold;
  report.tally.threshold = threshold;

  double fro = 0.0;
  for (double v : a.values) fro += v * v;
  const double happy_tol = cfg.happy_breakdown_rel * std::sqrt(fro);

  std::vector<double> x(n, 0.0);
  const double bnorm = vec_norm2(b);
  if (bnorm == 0.0) {
    report.converged = true;
    if (x_out) *x_out = x;
    return report;
  }
  const double abs_tol = cfg.convergence_rtol * bnorm;

  std::vector<std::vector<double>> q(static_cast<std::size_t>(m) + 1,
                                     std::vector<double>(n, 0.0));
  std::vector<double> hcol(static_cast<std::size_t>(m) + 1);
  std::vector<double> rmat(static_cast<std::size_t>(m) * (static_cast<std::size_t>(m) + 1));
  std::vector<double> g(static_cast<std::size_t>(m) + 1), cs(static_cast<std::size_t>(m)),
      sn(static_cast<std::size_t>(m));
  std::vector<double> v(n), r(n);

  auto rm = [&rmat, m](int i, int j) -> double& {
    return rmat[static_cast<std::size_t>(j) * (static_cast<std::size_t>(m) + 1) +
                static_cast<std::size_t>(i)];
  };

  auto audit = [&report, &cfg](const ExponentInterval& iv, int iter, bool self) {
    if (!cfg.log_intervals) return;
    report.interval_log.push_back(
        {iter, iv.empty ? 0 : iv.lo, iv.empty ? 0 : iv.hi, iv.contains_zero, self});
  };

  while (report.iterations < cfg.max_total_iterations && !report.converged &&
         !report.happy_breakdown) {
    spmv(a, x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    const double beta = vec_norm2(r);
    if (!std::isfinite(beta)) throw std::runtime_error("gmres_solve: non-finite residual");
    report.residual_history.push_back(beta);
    if (beta <= abs_tol) {
      report.converged = true;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) q[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;

    int j = 0;
    for (; j < m && report.iterations < cfg.max_total_iterations; ++j) {
      ++report.iterations;
      spmv(a, q[static_cast<std::size_t>(j)], v);
      for (int i = 0; i <= j; ++i) {
        if (cfg.instrument) {
          const ExponentInterval vi = orthogonalization_operand_interval(v);
          audit(vi, report.iterations, false);
          report.tally.add(classify_errors(normalized_premise_interval(), vi, table, threshold));
          ++report.instrumented_dots;
        }
        double hij = 0.0;
        const std::vector<double>& qi = q[static_cast<std::size_t>(i)];
        for (std::size_t kk = 0; kk < n; ++kk) hij += qi[kk] * v[kk];
        for (std::size_t kk = 0; kk < n; ++kk) v[kk] -= hij * qi[kk];
        hcol[static_cast<std::size_t>(i)] = hij;
      }
      if (cfg.instrument && cfg.count_norm_dots) {
        const ExponentInterval vi = orthogonalization_operand_interval(v);
        audit(vi, report.iterations, true);
        report.tally.add(classify_errors(vi, vi, table, threshold));
        ++report.instrumented_dots;
      }
      const double hnext = vec_norm2(v);
      if (!std::isfinite(hnext)) throw std::runtime_error("gmres_solve: non-finite basis norm");
      hcol[static_cast<std::size_t>(j) + 1] = hnext;

      const bool happy = hnext <= happy_tol;
      if (!happy) {
        for (std::size_t kk = 0; kk < n; ++kk) q[static_cast<std::size_t>(j) + 1][kk] = v[kk] / hnext;
      }

      for (int i = 0; i <= j; ++i) rm(i, j) = hcol[static_cast<std::size_t>(i)];
      rm(j + 1, j) = hcol[static_cast<std::size_t>(j) + 1];
      for (int i = 0; i < j; ++i) {
        const double t = cs[static_cast<std::size_t>(i)] * rm(i, j) +
                         sn[static_cast<std::size_t>(i)] * rm(i + 1, j);
        rm(i + 1, j) = -sn[static_cast<std::size_t>(i)] * rm(i, j) +
                       cs[static_cast<std::size_t>(i)] * rm(i + 1, j);
        rm(i, j) = t;
      }
      const double ajj = rm(j, j), bjj = rm(j + 1, j);
      const double denom = std::hypot(ajj, bjj);
      if (denom == 0.0) {
        cs[static_cast<std::size_t>(j)] = 1.0;
        sn[static_cast<std::size_t>(j)] = 0.0;
      } else {
        cs[static_cast<std::size_t>(j)] = ajj / denom;
        sn[static_cast<std::size_t>(j)] = bjj / denom;
      }
      rm(j, j) = cs[static_cast<std::size_t>(j)] * ajj + sn[static_cast<std::size_t>(j)] * bjj;
      rm(j + 1, j) = 0.0;
      const double gj = cs[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
      g[static_cast<std::size_t>(j) + 1] =
          -sn[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(j)];
      g[static_cast<std::size_t>(j)] = gj;

      const double res_est = std::fabs(g[static_cast<std::size_t>(j) + 1]);
      report.residual_history.push_back(res_est);
      if (happy) report.happy_breakdown = true;  // subspace closed: exact solution inside
      if (res_est <= abs_tol) report.converged = true;
      if (happy || report.converged) {
        ++j;
        break;
      }
    }

    if (cfg.check_basis) {
      const int basis_count = j;  // q[0..j-1] were built and used this cycle
      for (int i1 = 0; i1 < basis_count; ++i1) {
        for (int i2 = i1; i2 < basis_count; ++i2) {
          double dot = 0.0;
          for (std::size_t kk = 0; kk < n; ++kk) {
            dot += q[static_cast<std::size_t>(i1)][kk] * q[static_cast<std::size_t>(i2)][kk];
          }
          if (i1 == i2) {
            report.max_normalization_defect =
                std::max(report.max_normalization_defect, std::fabs(std::sqrt(dot) - 1.0));
            report.max_basis_defect = std::max(report.max_basis_defect, std::fabs(dot - 1.0));
          } else {
            report.max_basis_defect = std::max(report.max_basis_defect, std::fabs(dot));
          }
        }
      }
    }

    // Solution update from the rotated triangular system.
    if (j > 0) {
      std::vector<double> y(static_cast<std::size_t>(j), 0.0);
      for (int i = j - 1; i >= 0; --i) {
        double s = g[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < j; ++k) s -= rm(i, k) * y[static_cast<std::size_t>(k)];
        if (rm(i, i) == 0.0) throw std::runtime_error("gmres_solve: singular update system");
        y[static_cast<std::size_t>(i)] = s / rm(i, i);
      }
      for (int i = 0; i < j; ++i) {
        const double yi = y[static_cast<std::size_t>(i)];
        const std::vector<double>& qi = q[static_cast<std::size_t>(i)];
        for (std::size_t kk = 0; kk < n; ++kk) x[kk] += yi * qi[kk];
      }
    }
  }

  spmv(a, x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  report.final_residual = vec_norm2(r);
  if (report.final_residual <= abs_tol) report.converged = true;
  if (x_out) *x_out = std::move(x);
  return report;
}

std::vector<double> make_rhs(const CsrMatrix& a, RhsMode mode, std::uint64_t seed,
                             const std::string& path) {
  const std::size_t n = static_cast<std::size_t>(a.n_rows);
  switch (mode) {
    case RhsMode::OnesSolution: {
      std::vector<double> ones(static_cast<std::size_t>(a.n_cols), 1.0);
      return spmv(a, ones);
    }
    case RhsMode::Random: {
      SplitMix64 rng(seed);
      std::vector<double> b(n);
      for (double& x : b) x = 2.0 * rng.next_unit() - 1.0;
      return b;
    }
    case RhsMode::File: {
      std::ifstream f(path);
      if (!f) throw std::runtime_error("cannot open rhs file: " + path);
      std::vector<double> b;
      b.reserve(n);
      double x = 0.0;
      while (f >> x) b.push_back(x);
      if (b.size() != n) throw std::runtime_error("rhs length mismatch: " + path);
      return b;
    }
  }
  throw std::logic_error("unknown rhs mode");
}

}  // namespace bitfault
