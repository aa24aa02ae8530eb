#pragma once

#include <cstddef>
#include <cstdint>

#include "bcmg/dense_matrix.hpp"

namespace bcmg {

/// SplitMix64 (Steele, Lea & Flood). Every random matrix in the project is
/// drawn from this generator so results are reproducible bit-for-bit from
/// the seed alone, independent of the standard library in use.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Independent stream derived from this one.
  SplitMix64 split() noexcept { return SplitMix64(next()); }

  /// Uniform double in [-1, 1): 53 random mantissa bits mapped affinely.
  double uniform_pm1() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-52 - 1.0;
  }

 private:
  std::uint64_t state_;
};

/// Fills a matrix with entries uniform in [-1, 1) (both parts for complex).
template <Scalar T>
DenseMatrix<T> random_uniform(std::size_t rows, std::size_t cols, SplitMix64& rng);

/// diag(1, 2, ..., n).
template <Scalar T>
DenseMatrix<T> diag_ramp(std::size_t n);

/// B * B^H + n * I with B uniform in [-1, 1).
template <Scalar T>
DenseMatrix<T> random_spd(std::size_t n, std::uint64_t seed);

/// (B + B^H) / 2 with B uniform in [-1, 1); indefinite in general.
template <Scalar T>
DenseMatrix<T> random_hermitian(std::size_t n, std::uint64_t seed);

/// An n x nrhs matrix of ones.
template <Scalar T>
DenseMatrix<T> ones(std::size_t n, std::size_t nrhs);

}  // namespace bcmg
