#pragma once

#include <cstddef>
#include <span>

#include "bcmg/dense_matrix.hpp"

// Accuracy measures shared by the CLI, the tests and the benchmarks. All
// of them accumulate in double precision whatever the element type.
namespace bcmg {

/// ||A X - B||_F / (||A||_F ||X||_F + ||B||_F)
template <Scalar T>
double solve_residual(const DenseMatrix<T>& a, const DenseMatrix<T>& x, const DenseMatrix<T>& b);

/// ||A Ainv - I||_F / sqrt(N)
template <Scalar T>
double inverse_residual(const DenseMatrix<T>& a, const DenseMatrix<T>& ainv);

/// ||A V - V diag(values)||_F / ||A||_F
template <Scalar T>
double eigen_residual(const DenseMatrix<T>& a, std::span<const real_t<T>> values, const DenseMatrix<T>& v);

/// ||V^H V - I||_F
template <Scalar T>
double orthogonality(const DenseMatrix<T>& v);

template <Scalar T>
double max_abs(const DenseMatrix<T>& a);

template <Scalar T>
double max_abs_diff(const DenseMatrix<T>& a, const DenseMatrix<T>& b);

template <Scalar T>
double frobenius(const DenseMatrix<T>& a);

/// Eigenvector agreement that is blind to the basis chosen inside a
/// cluster: reference eigenvalues closer than `gap` are grouped, and the
/// result is the largest elementwise difference between the two spectral
/// projectors over all groups. Both value arrays must be ascending.
template <Scalar T>
double projector_distance(std::span<const real_t<T>> values, const DenseMatrix<T>& v,
                          std::span<const real_t<T>> ref_values, const DenseMatrix<T>& ref_v, double gap);

}  // namespace bcmg
