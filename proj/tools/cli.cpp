#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bcmg/generate.hpp"
#include "bcmg/host_api.hpp"
#include "bcmg/matrix_io.hpp"
#include "bcmg/oracle.hpp"
#include "bcmg/residual.hpp"

namespace bcmg::cli {

namespace {

std::string_view routine_name(Routine r) {
  switch (r) {
    case Routine::potrs: return "potrs";
    case Routine::potri: return "potri";
    case Routine::syevd: return "syevd";
  }
  return "?";
}

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <Scalar T>
DenseMatrix<T> load_matrix(const BenchConfig& c) {
  switch (c.source.kind) {
    case SourceKind::diag: return diag_ramp<T>(c.n);
    case SourceKind::random_spd: return random_spd<T>(c.n, c.seed);
    case SourceKind::file: {
      AnyMatrix m = read_matrix_file(c.source.path);
      auto* typed = std::get_if<DenseMatrix<T>>(&m);
      if (typed == nullptr) throw ConfigError("matrix file element type differs from --dtype");
      if (typed->rows() != c.n || typed->cols() != c.n) throw ConfigError("matrix file is not n x n");
      return std::move(*typed);
    }
  }
  throw ConfigError("unknown matrix source");
}

// Ones for the analytic sources; a split stream of the matrix seed for
// random_spd so A and b are never drawn from the same sequence.
template <Scalar T>
DenseMatrix<T> load_rhs(const BenchConfig& c) {
  if (c.source.kind != SourceKind::random_spd) return ones<T>(c.n, c.n_rhs);
  SplitMix64 root(c.seed);
  SplitMix64 stream = root.split();
  return random_uniform<T>(c.n, c.n_rhs, stream);
}

template <Scalar T>
struct Execution {
  DenseMatrix<T> a;
  DenseMatrix<T> b;       // potrs only
  DenseMatrix<T> result;  // x, A^{-1} or V
  std::vector<real_t<T>> values;
  RunReport report;
  double residual = 0;
};

void append_trace(const BenchConfig& c, const RunReport& report) {
  if (c.trace_path.empty()) return;
  const bool fresh = !std::ifstream(c.trace_path).good() || std::ifstream(c.trace_path).peek() == EOF;
  std::ofstream os(c.trace_path, std::ios::app);
  if (!os) throw ConfigError("cannot open trace file " + c.trace_path);
  write_copy_log_csv(os, report.copy_log, fresh);
}

template <Scalar T>
Execution<T> execute(const BenchConfig& c, std::size_t tile, std::size_t devices) {
  Execution<T> e;
  e.a = load_matrix<T>(c);
  RunOptions opt;
  opt.tile = {tile};
  opt.devices = devices;
  opt.mode = c.mode;
  opt.arena_capacity = c.arena_capacity;
  switch (c.routine) {
    case Routine::potrs:
      e.b = load_rhs<T>(c);
      e.result = solve(e.a, e.b, opt, &e.report);
      e.residual = solve_residual(e.a, e.result, e.b);
      break;
    case Routine::potri:
      e.result = inverse(e.a, opt, &e.report);
      e.residual = inverse_residual(e.a, e.result);
      break;
    case Routine::syevd: {
      auto out = eigh(e.a, opt, &e.report);
      e.values = std::move(out.values);
      e.result = std::move(out.vectors);
      e.residual = eigen_residual<T>(e.a, e.values, e.result);
      break;
    }
  }
  append_trace(c, e.report);
  return e;
}

struct Check {
  std::string name;
  double value;
  double threshold;
  bool pass() const { return value <= threshold; }
};

template <Scalar T>
std::vector<Check> verify_checks(const BenchConfig& c, const Execution<T>& e) {
  const double n = static_cast<double>(c.n);
  const double eps = static_cast<double>(epsilon<T>);
  const double res_tol = 100 * n * eps;
  const double cmp_tol = 10 * n * eps;
  std::vector<Check> checks;
  switch (c.routine) {
    case Routine::potrs: {
      checks.push_back({"residual", e.residual, res_tol});
      const auto ref = oracle::ref_solve(e.a, e.b);
      checks.push_back({"oracle_max_diff", max_abs_diff(e.result, ref), cmp_tol * std::max(max_abs(ref), 1.0)});
      if (c.source.kind == SourceKind::diag) {
        DenseMatrix<T> exact(c.n, c.n_rhs);
        for (std::size_t r = 0; r < c.n_rhs; ++r) {
          for (std::size_t i = 0; i < c.n; ++i) exact(i, r) = T(real_t<T>(1) / static_cast<real_t<T>>(i + 1));
        }
        checks.push_back({"analytic_max_diff", max_abs_diff(e.result, exact), cmp_tol});
      }
      break;
    }
    case Routine::potri: {
      checks.push_back({"residual", e.residual, res_tol});
      const auto ref = oracle::ref_inverse(e.a);
      checks.push_back({"oracle_max_diff", max_abs_diff(e.result, ref), cmp_tol * std::max(max_abs(ref), 1.0)});
      if (c.source.kind == SourceKind::diag) {
        DenseMatrix<T> exact(c.n, c.n);
        for (std::size_t i = 0; i < c.n; ++i) exact(i, i) = T(real_t<T>(1) / static_cast<real_t<T>>(i + 1));
        checks.push_back({"analytic_max_diff", max_abs_diff(e.result, exact), cmp_tol});
      }
      break;
    }
    case Routine::syevd: {
      checks.push_back({"residual", e.residual, res_tol});
      checks.push_back({"orthogonality", orthogonality(e.result), res_tol});
      const bool ascending = std::is_sorted(e.values.begin(), e.values.end());
      checks.push_back({"ascending", ascending ? 0.0 : 1.0, 0.0});
      const auto ref = oracle::ref_eigh(e.a);
      double lam = 0;
      double scale = 1;
      for (std::size_t i = 0; i < c.n; ++i) {
        lam = std::max(lam, std::abs(static_cast<double>(e.values[i]) - static_cast<double>(ref.values[i])));
        scale = std::max(scale, std::abs(static_cast<double>(ref.values[i])));
      }
      checks.push_back({"oracle_eigenvalues", lam, cmp_tol * scale});
      const double gap = frobenius(e.a) / n;
      checks.push_back({"oracle_projectors",
                        projector_distance<T>(e.values, e.result, ref.values, ref.vectors, gap), res_tol});
      if (c.source.kind == SourceKind::diag) {
        double d = 0;
        for (std::size_t i = 0; i < c.n; ++i) {
          d = std::max(d, std::abs(static_cast<double>(e.values[i]) - static_cast<double>(i + 1)));
        }
        checks.push_back({"analytic_eigenvalues", d, cmp_tol * n});
      }
      break;
    }
  }
  return checks;
}

std::string header_line(const BenchConfig& c, std::size_t tile, std::size_t devices) {
  std::ostringstream os;
  os << routine_name(c.routine) << " n=" << c.n << " tile=" << tile << " devices=" << devices
     << " dtype=" << to_string(c.element_type) << " mode=" << to_string(c.mode);
  return os.str();
}

std::string format_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9f", s);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

template <class F>
decltype(auto) with_type(ElementType t, F&& f) {
  return visit_element_type(t, std::forward<F>(f));
}

std::ostream& open_out(const std::string& path, std::ofstream& file, std::ostream& fallback) {
  if (path.empty()) return fallback;
  file.open(path);
  if (!file) throw ConfigError("cannot open output file " + path);
  return file;
}

std::vector<std::size_t> parse_list(const std::string& text, const char* flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size() || item.front() == '-') {
      throw ConfigError(std::string("bad value '") + item + "' in " + flag);
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ConfigError(std::string(flag) + " needs at least one value");
  return out;
}

MatrixSource parse_source(const std::string& text) {
  if (text == "diag") return {SourceKind::diag, {}};
  if (text == "random_spd") return {SourceKind::random_spd, {}};
  if (text.rfind("file:", 0) == 0 && text.size() > 5) return {SourceKind::file, text.substr(5)};
  throw ConfigError("--matrix must be diag, random_spd or file:PATH");
}

}  // namespace

std::string format_residual(double r) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", r);
  return buf;
}

void validate_config(const BenchConfig& c) {
  auto fail = [](const std::string& what) { throw Error(Errc::invalid_argument, what); };
  if (c.n < 1) fail("n must be at least 1");
  if (c.tiles.empty()) fail("at least one tile width is required");
  if (c.devices.empty()) fail("at least one device count is required");
  for (std::size_t t : c.tiles) {
    if (t < 1 || t > c.n) fail("tile " + std::to_string(t) + " outside [1, n=" + std::to_string(c.n) + "]");
  }
  for (std::size_t d : c.devices) {
    if (d < 1) fail("device count must be at least 1");
  }
  if (c.repetitions < 1) fail("repetitions must be at least 1");
  if (c.n_rhs < 1) fail("nrhs must be at least 1");
}

RunResult run_once(const BenchConfig& config, std::size_t tile, std::size_t devices) {
  return with_type(config.element_type, [&]<class T>(std::type_identity<T>) {
    const auto e = execute<T>(config, tile, devices);
    return RunResult{e.report.alloc_seconds, e.report.solve_seconds, e.residual};
  });
}

int run_verify(const BenchConfig& config, std::ostream& out, std::ostream& err) {
  std::ofstream file;
  std::ostream* csv = config.out_path.empty() ? nullptr : &open_out(config.out_path, file, out);
  if (csv) *csv << "routine,n,tile,devices,dtype,mode,check,value,threshold,pass\n";

  std::vector<std::string> failed;
  for (std::size_t tile : config.tiles) {
    for (std::size_t devices : config.devices) {
      const std::string head = header_line(config, tile, devices);
      out << head << '\n';
      std::vector<Check> checks;
      try {
        checks = with_type(config.element_type, [&]<class T>(std::type_identity<T>) {
          return verify_checks<T>(config, execute<T>(config, tile, devices));
        });
      } catch (const NotPositiveDefinite& e) {
        out << "  factorization FAIL: not positive definite, pivot " << e.pivot() << '\n';
        failed.push_back(head + " factorization");
        continue;
      } catch (const Error& e) {
        out << "  run FAIL: " << e.what() << '\n';
        failed.push_back(head + " run");
        continue;
      }
      for (const Check& ch : checks) {
        out << "  " << ch.name << ' ' << format_residual(ch.value) << " <= " << format_residual(ch.threshold) << ' '
            << (ch.pass() ? "PASS" : "FAIL") << '\n';
        if (csv) {
          *csv << routine_name(config.routine) << ',' << config.n << ',' << tile << ',' << devices << ','
               << to_string(config.element_type) << ',' << to_string(config.mode) << ',' << ch.name << ','
               << format_residual(ch.value) << ',' << format_residual(ch.threshold) << ','
               << (ch.pass() ? "pass" : "fail") << '\n';
        }
        if (!ch.pass()) failed.push_back(head + " " + ch.name);
      }
    }
  }
  if (failed.empty()) {
    out << "verify: PASS\n";
    return kExitPass;
  }
  for (const auto& f : failed) err << "failed check: " << f << '\n';
  out << "verify: FAIL\n";
  return kExitCheckFailed;
}

int run_bench(const BenchConfig& config, std::ostream& out, std::ostream& err) {
  std::ofstream file;
  std::ostream& csv = open_out(config.out_path, file, out);
  csv << kBenchCsvHeader << '\n';
  int status = kExitPass;
  for (std::size_t tile : config.tiles) {
    for (std::size_t devices : config.devices) {
      std::vector<double> alloc;
      std::vector<double> solve_t;
      for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
        RunResult r;
        try {
          r = run_once(config, tile, devices);
        } catch (const Error& e) {
          err << header_line(config, tile, devices) << ": " << e.what() << '\n';
          status = kExitCheckFailed;
          break;
        }
        alloc.push_back(r.alloc_seconds);
        solve_t.push_back(r.solve_seconds);
        csv << routine_name(config.routine) << ',' << config.n << ',' << tile << ',' << devices << ','
            << to_string(config.element_type) << ',' << to_string(config.mode) << ',' << rep << ','
            << format_seconds(r.alloc_seconds) << ',' << format_seconds(r.solve_seconds) << ','
            << format_residual(r.residual) << '\n';
      }
      if (!solve_t.empty()) {
        err << "summary " << header_line(config, tile, devices) << " reps=" << solve_t.size()
            << " solve_min=" << format_seconds(*std::min_element(solve_t.begin(), solve_t.end()))
            << " solve_median=" << format_seconds(median(solve_t))
            << " alloc_min=" << format_seconds(*std::min_element(alloc.begin(), alloc.end()))
            << " alloc_median=" << format_seconds(median(alloc)) << '\n';
      }
    }
  }
  return status;
}

namespace {

template <Scalar T>
AnyMatrix generate_any(const BenchConfig& c) {
  return load_matrix<T>(c);
}

int run_gen(const BenchConfig& c, std::ostream& out) {
  if (c.out_path.empty()) throw ConfigError("gen needs --out PATH");
  if (c.source.kind == SourceKind::file) throw ConfigError("gen takes --matrix diag or random_spd");
  AnyMatrix m = with_type(c.element_type, [&]<class T>(std::type_identity<T>) { return generate_any<T>(c); });
  write_matrix_file(c.out_path, m);
  out << "wrote " << c.n << 'x' << c.n << ' ' << to_string(c.element_type) << " matrix to " << c.out_path << '\n';
  return kExitPass;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Block-cyclic multi-device dense linear algebra: verification and benchmarks"};
  app.require_subcommand(1);

  std::string routine = "potrs";
  std::size_t n = 0;
  std::string tiles = "64";
  std::string devices = "1";
  std::string dtype = "f64";
  std::string matrix = "diag";
  std::uint64_t seed = 0;
  std::size_t nrhs = 1;
  std::size_t reps = 5;
  std::string mode;
  std::string trace;
  std::string out_path;
  std::size_t arena_cap = kUnlimited;

  auto add_common = [&](CLI::App* sub, bool solver_flags) {
    sub->add_option("--n", n, "Matrix dimension");
    sub->add_option("--dtype", dtype, "Element type: f32, f64, c64 or c128");
    sub->add_option("--matrix", matrix, "Matrix source: diag, random_spd or file:PATH");
    sub->add_option("--seed", seed, "Seed for random_spd");
    sub->add_option("--out", out_path, "Output path");
    if (!solver_flags) return;
    sub->add_option("--routine", routine, "potrs, potri or syevd");
    sub->add_option("--tile", tiles, "Tile widths, comma separated");
    sub->add_option("--devices", devices, "Device counts, comma separated");
    sub->add_option("--nrhs", nrhs, "Right-hand-side columns for potrs");
    sub->add_option("--mode", mode, "spmd or mpmd (default: $BCMG_MODE, else spmd)");
    sub->add_option("--trace", trace, "Append the peer-copy log as CSV");
    sub->add_option("--arena-cap", arena_cap, "Per-arena capacity in bytes");
  };
  CLI::App* verify = app.add_subcommand("verify", "Run distributed and oracle, compare, report residuals");
  add_common(verify, true);
  CLI::App* bench = app.add_subcommand("bench", "Time repetitions and emit CSV");
  add_common(bench, true);
  bench->add_option("--reps", reps, "Repetitions per configuration");
  CLI::App* gen = app.add_subcommand("gen", "Write a generated matrix in BCMG format");
  add_common(gen, false);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitConfigError;
  }

  try {
    BenchConfig c;
    if (routine == "potrs") {
      c.routine = Routine::potrs;
    } else if (routine == "potri") {
      c.routine = Routine::potri;
    } else if (routine == "syevd") {
      c.routine = Routine::syevd;
    } else {
      throw ConfigError("--routine must be potrs, potri or syevd");
    }
    c.source = parse_source(matrix);
    const auto et = parse_element_type(dtype);
    if (!et) throw ConfigError("--dtype must be f32, f64, c64 or c128");
    c.element_type = *et;
    c.n = n;
    if (c.source.kind == SourceKind::file) {
      try {
        const AnyMatrix m = read_matrix_file(c.source.path);
        const ElementType file_type = element_type_of_matrix(m);
        const bool dtype_given = verify->count("--dtype") + bench->count("--dtype") > 0;
        if (dtype_given && file_type != c.element_type) throw ConfigError("--dtype differs from the matrix file");
        c.element_type = file_type;
        const std::size_t rows = std::visit([](const auto& x) { return x.rows(); }, m);
        if (c.n == 0) c.n = rows;
      } catch (const Error& e) {
        throw ConfigError(std::string("cannot read matrix file: ") + e.what());
      }
    }
    c.tiles = parse_list(tiles, "--tile");
    c.devices = parse_list(devices, "--devices");
    c.seed = seed;
    c.n_rhs = nrhs;
    c.repetitions = reps;
    std::string mode_name = mode;
    if (mode_name.empty()) {
      const char* env = std::getenv("BCMG_MODE");
      mode_name = env != nullptr && *env != '\0' ? env : "spmd";
    }
    const auto parsed_mode = parse_mode(mode_name);
    if (!parsed_mode) throw ConfigError("mode must be spmd or mpmd, got '" + mode_name + "'");
    c.mode = *parsed_mode;
    c.arena_capacity = arena_cap;
    c.trace_path = trace;
    c.out_path = out_path;

    if (gen->parsed()) {
      if (c.n < 1) throw ConfigError("n must be at least 1");
      return run_gen(c, out);
    }
    validate_config(c);
    if (verify->parsed()) return run_verify(c, out, err);
    return run_bench(c, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const Error& e) {
    if (e.code() == Errc::invalid_argument) {
      err << "config error: " << e.what() << '\n';
      return kExitConfigError;
    }
    err << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

}  // namespace bcmg::cli
