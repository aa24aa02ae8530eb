#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bcmg {

enum class Errc {
  dimension_mismatch,
  type_structure_mismatch,
  invalid_argument,
  out_of_range,
  out_of_memory,
  stale_handle,
  foreign_handle,
  overlapping_copy,
  double_publish,
  unknown_device,
  incomplete_registry,
  not_quiescent,
  coordinator_busy,
  staging_misuse,
  non_bijective,
  not_positive_definite,
  no_convergence,
  format_error,
};

std::string_view to_string(Errc code) noexcept;

/// Base exception for every failure raised by the library. The code is
/// stable and is what callers (and the CLI) switch on.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Raised by the Cholesky-based drivers when a pivot is not positive.
/// pivot() is 1-based, as in the LAPACK info convention.
class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(std::size_t pivot)
      : Error(Errc::not_positive_definite,
              "leading minor of order " + std::to_string(pivot) + " is not positive definite"),
        pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

}  // namespace bcmg
