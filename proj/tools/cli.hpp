#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bcmg/element_type.hpp"
#include "bcmg/runtime.hpp"

namespace bcmg::cli {

enum class Routine { potrs, potri, syevd };

enum class SourceKind { diag, random_spd, file };

struct MatrixSource {
  SourceKind kind = SourceKind::diag;
  std::string path;  // file only
};

struct BenchConfig {
  Routine routine = Routine::potrs;
  std::size_t n = 0;
  std::vector<std::size_t> tiles;
  std::vector<std::size_t> devices;
  ElementType element_type = ElementType::real64;
  MatrixSource source;
  std::uint64_t seed = 0;
  std::size_t n_rhs = 1;
  std::size_t repetitions = 5;
  CoordinationMode mode = CoordinationMode::shared_address;
  std::size_t arena_capacity = kUnlimited;
  std::string trace_path;
  std::string out_path;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;

inline constexpr const char* kBenchCsvHeader =
    "routine,n,tile,devices,dtype,mode,rep,alloc_seconds,solve_seconds,residual";

/// Throws Error{invalid_argument} naming the offending field.
void validate_config(const BenchConfig& config);

/// One routine run on one (tile, devices) point. `residual` is the
/// routine's headline residual, computed identically by verify and bench.
struct RunResult {
  double alloc_seconds = 0;
  double solve_seconds = 0;
  double residual = 0;
};

RunResult run_once(const BenchConfig& config, std::size_t tile, std::size_t devices);

int run_verify(const BenchConfig& config, std::ostream& out, std::ostream& err);
int run_bench(const BenchConfig& config, std::ostream& out, std::ostream& err);

/// Full command line, argv[0] included. Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Residuals are printed with enough digits to round-trip a double.
std::string format_residual(double r);

}  // namespace bcmg::cli
