#pragma once

#include <cstddef>
#include <vector>

#include "bcmg/dense_matrix.hpp"
#include "bcmg/descriptor.hpp"

// Single-device textbook implementations used as ground truth by the tests
// and by `bcmg verify`. Deliberately unblocked and allocation-heavy.
namespace bcmg::oracle {

template <Scalar T>
struct CholeskyResult {
  DenseMatrix<T> factor;  // lower triangular, zero above the diagonal
  std::size_t info = 0;
};

template <Scalar T>
CholeskyResult<T> ref_cholesky(const DenseMatrix<T>& a);

/// Throws NotPositiveDefinite.
template <Scalar T>
DenseMatrix<T> ref_solve(const DenseMatrix<T>& a, const DenseMatrix<T>& b);

template <Scalar T>
DenseMatrix<T> ref_inverse(const DenseMatrix<T>& a);

template <Scalar T>
struct EighResult {
  std::vector<real_t<T>> values;  // ascending
  DenseMatrix<T> vectors;         // largest-magnitude entry of each column real positive
};

/// Cyclic Jacobi; stops once the off-diagonal Frobenius norm drops below
/// n * eps * ||A||_F. More than 100 sweeps raises Error{no_convergence}.
template <Scalar T>
EighResult<T> ref_eigh(const DenseMatrix<T>& a);

/// Gather/scatter model of the contiguous -> block-cyclic redistribution:
/// the block-cyclic order is enumerated tile by tile per device and the
/// columns are copied into a fresh matrix. inverse = true undoes it.
template <Scalar T>
DenseMatrix<T> ref_redistribute(const DenseMatrix<T>& columns, TileSpec tile, std::size_t num_devices,
                                bool inverse = false);

/// The block-cyclic column order: entry p is the global column stored at
/// device-concatenated position p.
std::vector<std::size_t> cyclic_order(std::size_t n_cols, TileSpec tile, std::size_t num_devices);

}  // namespace bcmg::oracle
