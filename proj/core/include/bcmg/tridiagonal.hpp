#pragma once

#include <cstddef>
#include <span>

namespace bcmg {

/// Eigen-decomposition of a real symmetric tridiagonal matrix by implicit
/// QR with Wilkinson shifts.
///
/// On entry `diag` (n) and `offdiag` (n - 1, may be empty for n <= 1) hold
/// the matrix; `vectors` is an n x n column-major matrix that the rotations
/// are accumulated into (pass the identity to get the tridiagonal's own
/// eigenvectors). On return `diag` holds the eigenvalues in ascending order
/// and the columns of `vectors` are permuted to match.
///
/// Throws Error{no_convergence} after more than `max_sweeps` QR steps;
/// `max_sweeps` defaults to 30 n.
template <class Real>
void tridiagonal_eigen(std::span<Real> diag, std::span<Real> offdiag, std::span<Real> vectors,
                       std::size_t max_sweeps = static_cast<std::size_t>(-1));

}  // namespace bcmg
