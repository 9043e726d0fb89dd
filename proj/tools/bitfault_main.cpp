// Command-line front end: IEEE-754 anatomy, scalar and dot-product bit-flip
// fault enumeration, magnitude-grid Monte Carlo sweeps, sparse matrix
// utilities, and the instrumented GMRES analysis.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bitfault/dot_fault.hpp"
#include "bitfault/float_anatomy.hpp"
#include "bitfault/gmres.hpp"
#include "bitfault/monte_carlo.hpp"
#include "bitfault/scalar_fault.hpp"
#include "bitfault/sparse.hpp"

using json = nlohmann::ordered_json;
namespace bf = bitfault;

namespace {

constexpr const char* kArtifactVersion = "1.0.0";

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open input: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

double parse_value(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw CLI::ValidationError("value", "cannot parse '" + s + "' as a number");
  }
  return v;
}

std::vector<double> read_vector_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open vector file: " + path);
  std::vector<double> v;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    v.push_back(parse_value(line));
  }
  if (v.empty()) throw std::runtime_error("empty vector file: " + path);
  return v;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open output: " + path);
  f << text;
  if (!f) throw std::runtime_error("short write: " + path);
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Errors can span ~2^-1100 .. 2^1100; print a plain decimal when the value is
// representable, else frac*2^exp.
std::string format_error(const bf::ScaledPow2& e) {
  if (e.is_zero()) return "0";
  const double v = e.value();
  if (std::isfinite(v) && v != 0.0) return format_g17(v);
  std::ostringstream os;
  os << format_g17(e.frac) << "*2^" << e.exp2;
  return os.str();
}

json tally_json(const bf::ErrorClassTally& t) {
  return json{{"class1_lt_one", t.class1_lt_one},
              {"class2_grey", t.class2_grey},
              {"class3_detectable", t.class3_detectable},
              {"class4_nonnumeric", t.class4_nonnumeric},
              {"total", t.total()},
              {"threshold", t.threshold},
              {"shares",
               {{"class1", t.share1()},
                {"class2", t.share2()},
                {"class3", t.share3()},
                {"class4", t.share4()}}}};
}

struct ManifestWriter {
  json inputs = json::array();
  json outputs = json::array();
  json config = json::object();
  std::string subcommand;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void input(const std::string& path) {
    inputs.push_back({{"path", path}, {"fnv1a64", fnv1a64_file(path)}});
  }
  void output(const std::string& path) { outputs.push_back(path); }

  void emit() {
    if (outputs.empty()) return;
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    json m{{"schema_version", 1},
           {"artifact_version", kArtifactVersion},
           {"subcommand", subcommand},
           {"config", config},
           {"inputs", inputs},
           {"outputs", outputs},
           {"wall_clock_ms", ms}};
    const std::string path = outputs.front().get<std::string>() + ".manifest.json";
    write_text(path, m.dump(2) + "\n");
  }
};

void emit_or_print(const std::optional<std::string>& out, const std::string& text,
                   ManifestWriter& mw) {
  if (out) {
    write_text(*out, text);
    mw.output(*out);
    mw.emit();
  } else {
    std::cout << text;
  }
}

// ---------------------------------------------------------------------------

int cmd_anatomy(const std::string& value_str) {
  const double x = parse_value(value_str);
  const bf::FloatAnatomy a = bf::decompose(x);
  const int unbiased = a.biased_exponent - bf::kExponentBias;
  std::printf("value            : %s\n", format_g17(x).c_str());
  std::printf("kind             : %s\n", bf::value_kind_name(a.kind));
  std::printf("sign             : %u\n", a.sign);
  std::printf("biased exponent  : %d\n", a.biased_exponent);
  std::printf("mantissa (hex)   : 0x%013llx\n", static_cast<unsigned long long>(a.mantissa));
  if (a.kind == bf::ValueKind::Normal) {
    std::printf("\n  exponent    biased      storage\n");
    std::printf("  2^%-8d  %-9d  %s\n", unbiased, a.biased_exponent,
                bf::biased_exponent_bits(a.biased_exponent).c_str());
  }
  return 0;
}

int cmd_perturb(const std::string& value_str, bool csv, const std::optional<std::string>& out,
                ManifestWriter& mw) {
  const double x = parse_value(value_str);
  const auto records = bf::enumerate_perturbations(x);
  std::ostringstream os;
  if (csv) {
    os << "bit,region,perturbed,outcome,abs_error,delta_order\n";
    for (const auto& r : records) {
      os << r.bit << ',' << bf::bit_region_name(r.region) << ',' << format_g17(r.perturbed) << ','
         << bf::fault_outcome_name(r.outcome) << ','
         << (r.outcome == bf::FaultOutcome::NonNumeric ? "" : format_error(r.abs_error)) << ','
         << r.delta_order << '\n';
    }
  } else {
    os << "bit  region    perturbed                  outcome            abs error"
          "                  dOrder\n";
    for (const auto& r : records) {
      char line[160];
      std::snprintf(line, sizeof(line), "%-4d %-9s %-26s %-18s %-26s %d\n", r.bit,
                    bf::bit_region_name(r.region), format_g17(r.perturbed).c_str(),
                    bf::fault_outcome_name(r.outcome),
                    r.outcome == bf::FaultOutcome::NonNumeric ? "-"
                                                              : format_error(r.abs_error).c_str(),
                    r.delta_order);
      os << line;
    }
  }
  emit_or_print(out, os.str(), mw);
  return 0;
}

int cmd_dot_analyze(const std::string& a_path, const std::string& b_path, double threshold,
                    bool exact, const std::optional<std::string>& per_bit_csv,
                    const std::optional<std::string>& out, ManifestWriter& mw) {
  mw.input(a_path);
  mw.input(b_path);
  const std::vector<double> a = read_vector_file(a_path);
  const std::vector<double> b = read_vector_file(b_path);
  json doc{{"schema_version", 1}, {"mode", exact ? "exact" : "interval"}};
  if (exact) {
    const auto records = bf::enumerate_dot_errors(a, b);
    doc["tally"] = tally_json(bf::classify_exact(records, threshold));
    if (per_bit_csv) {
      std::ostringstream os;
      os << "site,index,bit,region,site_original,site_perturbed,outcome,abs_error\n";
      for (const auto& r : records) {
        os << bf::fault_site_name(r.site) << ',' << r.index << ',' << r.bit << ','
           << bf::bit_region_name(r.region) << ',' << format_g17(r.site_original) << ','
           << format_g17(r.site_perturbed) << ',' << bf::fault_outcome_name(r.outcome) << ','
           << (r.outcome == bf::FaultOutcome::NonNumeric ? "" : format_error(r.abs_error))
           << '\n';
      }
      write_text(*per_bit_csv, os.str());
      mw.output(*per_bit_csv);
    }
  } else {
    const bf::ExponentInterval ia = bf::extract_interval(a);
    const bf::ExponentInterval ib = bf::extract_interval(b);
    const bf::ErrorLookupTable table = bf::ErrorLookupTable::build();
    doc["interval_a"] = {{"lo", ia.lo}, {"hi", ia.hi}, {"contains_zero", ia.contains_zero},
                         {"empty", ia.empty}};
    doc["interval_b"] = {{"lo", ib.lo}, {"hi", ib.hi}, {"contains_zero", ib.contains_zero},
                         {"empty", ib.empty}};
    doc["tally"] = tally_json(bf::classify_errors(ia, ib, table, threshold));
  }
  emit_or_print(out, doc.dump(2) + "\n", mw);
  return 0;
}

int cmd_table_build(const std::string& out, int lo, int hi, bool full_square,
                    ManifestWriter& mw) {
  const bf::ErrorLookupTable table = bf::ErrorLookupTable::build();
  bf::write_table_file(table, out, lo, hi, !full_square);
  mw.output(out);
  mw.emit();
  std::cerr << "table written: biased exponents [" << lo << ", " << hi << "]"
            << (full_square ? "" : " (upper triangle; multiplication commutes)") << "\n";
  return 0;
}

int cmd_mc_surface(const bf::McConfig& cfg, const std::optional<std::string>& out,
                   ManifestWriter& mw) {
  const bf::McSurface s = bf::run_surface(cfg);
  emit_or_print(out, bf::surface_csv(s), mw);
  return 0;
}

int cmd_mc_slice(const bf::McConfig& cfg, const std::string& mode, int fixed_mag,
                 const std::optional<std::string>& out, ManifestWriter& mw) {
  const bf::McSurface s = bf::run_surface(cfg);
  const auto rows = bf::per_bit_slice(
      s, mode == "diagonal" ? bf::SliceMode::Diagonal : bf::SliceMode::FixedV, fixed_mag);
  emit_or_print(out, bf::slice_csv(rows), mw);
  return 0;
}

int cmd_matrix_poisson(int grid, const std::string& out, ManifestWriter& mw) {
  bf::write_matrix_market(bf::gen_poisson(grid), out);
  mw.output(out);
  mw.emit();
  return 0;
}

int cmd_matrix_norms(const std::string& in, const std::optional<std::string>& out,
                     ManifestWriter& mw) {
  mw.input(in);
  const bf::CsrMatrix m = bf::read_matrix_market(in);
  const bf::MatrixNorms n = bf::norms(m);
  json doc{{"schema_version", 1},
           {"rows", m.n_rows},
           {"cols", m.n_cols},
           {"nnz", m.nnz()},
           {"explicit_zeros", m.explicit_zeros()},
           {"inf_norm", n.inf_norm},
           {"two_norm_estimate", n.two_norm_estimate},
           {"frobenius_norm", n.frobenius_norm}};
  emit_or_print(out, doc.dump(2) + "\n", mw);
  return 0;
}

int cmd_matrix_equilibrate(const std::string& in, const std::string& out,
                           const std::optional<std::string>& scales, ManifestWriter& mw) {
  mw.input(in);
  const bf::CsrMatrix m = bf::read_matrix_market(in);
  const auto [scaled, s] = bf::equilibrate(m);
  bf::write_matrix_market(scaled, out);
  mw.output(out);
  if (scales) {
    json doc{{"schema_version", 1}, {"row_scale", s.row_scale}, {"col_scale", s.col_scale}};
    write_text(*scales, doc.dump() + "\n");
    mw.output(*scales);
  }
  mw.emit();
  return 0;
}

int cmd_gmres_analyze(const std::string& matrix_path, bool do_equilibrate,
                      const bf::GmresConfig& cfg, const std::string& rhs_spec,
                      const std::optional<std::string>& out, ManifestWriter& mw) {
  mw.input(matrix_path);
  bf::CsrMatrix a = bf::read_matrix_market(matrix_path);

  bf::RhsMode mode = bf::RhsMode::OnesSolution;
  std::uint64_t rhs_seed = 0;
  std::string rhs_path;
  if (rhs_spec == "ones") {
    mode = bf::RhsMode::OnesSolution;
  } else if (rhs_spec.rfind("random:", 0) == 0) {
    mode = bf::RhsMode::Random;
    rhs_seed = std::stoull(rhs_spec.substr(7));
  } else if (rhs_spec.rfind("file:", 0) == 0) {
    mode = bf::RhsMode::File;
    rhs_path = rhs_spec.substr(5);
    mw.input(rhs_path);
  } else {
    throw CLI::ValidationError("--rhs", "expected ones, random:SEED or file:PATH");
  }
  std::vector<double> b = bf::make_rhs(a, mode, rhs_seed, rhs_path);

  if (do_equilibrate) {
    auto [scaled, s] = bf::equilibrate(a);
    a = std::move(scaled);
    b = bf::apply_scaling_to_rhs(b, s);
  }
  const bf::MatrixNorms nm = bf::norms(a);
  const bf::ErrorLookupTable table = bf::ErrorLookupTable::build();

  const auto t0 = std::chrono::steady_clock::now();
  const bf::GmresReport rep = bf::gmres_solve(a, b, cfg, table, nm.two_norm_estimate);
  const double solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  json doc{{"schema_version", 1},
           {"matrix", {{"path", matrix_path},
                       {"rows", a.n_rows},
                       {"nnz", a.nnz()},
                       {"equilibrated", do_equilibrate},
                       {"inf_norm", nm.inf_norm},
                       {"two_norm_estimate", nm.two_norm_estimate},
                       {"frobenius_norm", nm.frobenius_norm}}},
           {"config", {{"restart", cfg.restart},
                       {"max_total_iterations", cfg.max_total_iterations},
                       {"rtol", cfg.convergence_rtol},
                       {"rhs", rhs_spec},
                       {"count_norm_dots", cfg.count_norm_dots}}},
           {"converged", rep.converged},
           {"happy_breakdown", rep.happy_breakdown},
           {"iterations", rep.iterations},
           {"final_residual", rep.final_residual},
           {"instrumented_dots", rep.instrumented_dots},
           {"threshold", rep.threshold},
           {"tally", tally_json(rep.tally)},
           {"residual_history", rep.residual_history},
           {"timing_ms", solve_ms}};
  if (cfg.log_intervals) {
    json lg = json::array();
    for (const auto& e : rep.interval_log) {
      lg.push_back({{"iteration", e.iteration},
                    {"lo", e.lo},
                    {"hi", e.hi},
                    {"contains_zero", e.contains_zero},
                    {"self_dot", e.self_dot}});
    }
    doc["interval_log"] = std::move(lg);
  }
  emit_or_print(out, doc.dump(2) + "\n", mw);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bit-flip fault analysis for IEEE-754 dot products and GMRES"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0: all cores); results are identical");

  ManifestWriter mw;

  // anatomy
  std::string value_str;
  auto* anatomy = app.add_subcommand("anatomy", "decompose one value into its stored fields");
  anatomy->add_option("value", value_str, "value to decompose")->required();

  // perturb
  std::string perturb_value;
  bool perturb_csv = false;
  std::optional<std::string> perturb_out;
  auto* perturb = app.add_subcommand("perturb", "all 64 single-bit perturbations of one value");
  perturb->add_option("value", perturb_value)->required();
  perturb->add_flag("--csv", perturb_csv, "emit CSV instead of the aligned table");
  perturb->add_option("--out", perturb_out, "write to file instead of stdout");

  // dot-analyze
  std::string dot_a, dot_b;
  double dot_threshold = 0.0;
  bool dot_exact = false, dot_interval = false;
  std::optional<std::string> dot_csv, dot_out;
  auto* dot = app.add_subcommand("dot-analyze", "classify bit-flip errors of a dot product");
  dot->add_option("--a", dot_a, "vector file, one value per line")->required();
  dot->add_option("--b", dot_b, "vector file, one value per line")->required();
  dot->add_option("--threshold", dot_threshold, "class 2/3 boundary (a 2-norm)")->required();
  dot->add_flag("--exact", dot_exact, "enumerate every element and bit");
  dot->add_flag("--interval", dot_interval, "exponent-interval model (default)");
  dot->add_option("--per-bit-csv", dot_csv, "write the exact per-bit record list (CSV)");
  dot->add_option("--out", dot_out);

  // table build
  auto* table = app.add_subcommand("table", "exponent-pair lookup table");
  std::string table_out;
  if (const char* cache = std::getenv("BITFAULT_CACHE_DIR")) {
    table_out = std::string(cache) + "/exponent_cells.bin";
  }
  int table_lo = 0, table_hi = bf::kMaxFiniteBiased;
  bool table_full = false;
  auto* tb = table->add_subcommand("build", "materialize table cells to a binary file");
  auto* tb_out = tb->add_option("--out", table_out,
                                "output path (default: $BITFAULT_CACHE_DIR/exponent_cells.bin)");
  if (table_out.empty()) tb_out->required();
  tb->add_option("--lo", table_lo, "first biased exponent (default 0)");
  tb->add_option("--hi", table_hi, "last biased exponent (default 2046)");
  tb->add_flag("--full", table_full, "store the full square instead of the upper triangle");

  // mc
  auto* mc = app.add_subcommand("mc", "magnitude-grid fault sweeps");
  bf::McConfig mc_cfg;
  std::optional<std::string> mc_out;
  auto add_mc_options = [&](CLI::App* sub) {
    sub->add_option("--n", mc_cfg.n, "vector length");
    sub->add_option("--samples", mc_cfg.samples, "sample pairs per cell");
    sub->add_option("--grid-min", mc_cfg.grid_min);
    sub->add_option("--grid-max", mc_cfg.grid_max);
    sub->add_option("--seed", mc_cfg.seed);
    sub->add_option("--out", mc_out);
  };
  auto* mc_surface = mc->add_subcommand("surface", "failure probability per magnitude cell");
  add_mc_options(mc_surface);
  auto* mc_slice = mc->add_subcommand("slice", "per-bit failure curves along a slice");
  add_mc_options(mc_slice);
  std::string slice_mode = "diagonal";
  int fixed_mag = 0;
  mc_slice->add_option("--mode", slice_mode)->check(CLI::IsMember({"diagonal", "fixed"}));
  mc_slice->add_option("--fixed-mag", fixed_mag, "v magnitude for --mode fixed");

  // matrix
  auto* matrix = app.add_subcommand("matrix", "sparse matrix utilities");
  int poisson_grid = 100;
  std::string matrix_out, matrix_in;
  std::optional<std::string> norms_out, scales_out;
  auto* mp = matrix->add_subcommand("poisson", "5-point Laplacian generator");
  mp->add_option("--grid", poisson_grid)->required();
  mp->add_option("--out", matrix_out)->required();
  auto* mn = matrix->add_subcommand("norms", "matrix norms (JSON)");
  mn->add_option("--in", matrix_in)->required();
  mn->add_option("--out", norms_out);
  auto* me = matrix->add_subcommand("equilibrate", "row/column scaling to unit row maxima");
  me->add_option("--in", matrix_in)->required();
  me->add_option("--out", matrix_out)->required();
  me->add_option("--scales", scales_out, "write scaling vectors (JSON)");

  // gmres
  auto* gm = app.add_subcommand("gmres", "iterative solve with fault instrumentation");
  std::string gm_matrix, gm_rhs = "ones";
  bool gm_equilibrate = false;
  bf::GmresConfig gm_cfg;
  std::optional<std::string> gm_out;
  auto* ga = gm->add_subcommand("analyze", "run the solver and count possible errors");
  ga->add_option("--matrix", gm_matrix)->required();
  ga->add_flag("--equilibrate", gm_equilibrate, "equilibrate the system first");
  ga->add_option("--restart", gm_cfg.restart);
  ga->add_option("--max-iters", gm_cfg.max_total_iterations);
  ga->add_option("--rtol", gm_cfg.convergence_rtol);
  ga->add_option("--rhs", gm_rhs, "ones | random:SEED | file:PATH");
  ga->add_flag("--log-intervals", gm_cfg.log_intervals, "keep the per-dot interval audit log");
  ga->add_option("--out", gm_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "usage-error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*anatomy) {
      mw.subcommand = "anatomy";
      return cmd_anatomy(value_str);
    }
    if (*perturb) {
      mw.subcommand = "perturb";
      mw.config = {{"value", perturb_value}, {"csv", perturb_csv}};
      return cmd_perturb(perturb_value, perturb_csv, perturb_out, mw);
    }
    if (*dot) {
      mw.subcommand = "dot-analyze";
      const bool exact = dot_exact && !dot_interval;
      mw.config = {{"a", dot_a}, {"b", dot_b}, {"threshold", dot_threshold},
                   {"mode", exact ? "exact" : "interval"}};
      return cmd_dot_analyze(dot_a, dot_b, dot_threshold, exact, dot_csv, dot_out, mw);
    }
    if (*tb) {
      mw.subcommand = "table build";
      mw.config = {{"lo", table_lo}, {"hi", table_hi}, {"full", table_full}};
      return cmd_table_build(table_out, table_lo, table_hi, table_full, mw);
    }
    if (*mc_surface || *mc_slice) {
      mc_cfg.threads = threads;
      mw.config = {{"n", mc_cfg.n},       {"samples", mc_cfg.samples},
                   {"grid_min", mc_cfg.grid_min}, {"grid_max", mc_cfg.grid_max},
                   {"seed", mc_cfg.seed}, {"threads", threads}};
      if (*mc_surface) {
        mw.subcommand = "mc surface";
        return cmd_mc_surface(mc_cfg, mc_out, mw);
      }
      mw.subcommand = "mc slice";
      mw.config["mode"] = slice_mode;
      mw.config["fixed_mag"] = fixed_mag;
      return cmd_mc_slice(mc_cfg, slice_mode, fixed_mag, mc_out, mw);
    }
    if (*mp) {
      mw.subcommand = "matrix poisson";
      mw.config = {{"grid", poisson_grid}};
      return cmd_matrix_poisson(poisson_grid, matrix_out, mw);
    }
    if (*mn) {
      mw.subcommand = "matrix norms";
      mw.config = {{"in", matrix_in}};
      return cmd_matrix_norms(matrix_in, norms_out, mw);
    }
    if (*me) {
      mw.subcommand = "matrix equilibrate";
      mw.config = {{"in", matrix_in}};
      return cmd_matrix_equilibrate(matrix_in, matrix_out, scales_out, mw);
    }
    if (*ga) {
      mw.subcommand = "gmres analyze";
      mw.config = {{"matrix", gm_matrix},
                   {"equilibrate", gm_equilibrate},
                   {"restart", gm_cfg.restart},
                   {"max_iters", gm_cfg.max_total_iterations},
                   {"rtol", gm_cfg.convergence_rtol},
                   {"rhs", gm_rhs}};
      return cmd_gmres_analyze(gm_matrix, gm_equilibrate, gm_cfg, gm_rhs, gm_out, mw);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage-error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
