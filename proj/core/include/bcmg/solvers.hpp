#pragma once

#include <cstddef>
#include <vector>

#include "bcmg/distributed_matrix.hpp"
#include "bcmg/layout.hpp"
#include "bcmg/runtime.hpp"

namespace bcmg {

// Every routine here is a coordinator routine: call it from inside
// DeviceRuntime::run_coordinated with the workers idle. Tile kernels act
// on one device's shard at a time; anything that crosses devices goes
// through Coordinator::peer_copy.

/// Column-to-device redistribution between the contiguous input layout and
/// the block-cyclic layout the factorizations run on. Single-device and
/// single-tile matrices need no data movement.
void redistribute_in(DistributedMatrix& a, Coordinator& coordinator, StagingPair* staging = nullptr);
void redistribute_out(DistributedMatrix& a, Coordinator& coordinator, StagingPair* staging = nullptr);

/// Bytes each routine allocates up front, per device and in the
/// coordinator scratch arena. Allocation happens before any data moves,
/// so an undersized arena fails with out_of_memory and leaves the input
/// untouched.
struct WorkspaceRequirement {
  std::vector<std::size_t> device_bytes;
  std::size_t scratch_bytes = 0;
};

WorkspaceRequirement potrf_workspace(const MatrixDescriptor& a, TileSpec tile, std::size_t num_devices);
WorkspaceRequirement potrs_workspace(const MatrixDescriptor& a, TileSpec tile, std::size_t num_devices,
                                     std::size_t n_rhs);
WorkspaceRequirement potri_workspace(const MatrixDescriptor& a, TileSpec tile, std::size_t num_devices);
WorkspaceRequirement syevd_workspace(const MatrixDescriptor& a, TileSpec tile, std::size_t num_devices);

struct FactorizationResult {
  /// 0 on success, otherwise the 1-based index of the first non-positive
  /// pivot; the leading (info - 1) x (info - 1) minor was positive definite.
  std::size_t info = 0;
};

/// Right-looking tiled Cholesky of a block-cyclic matrix. The lower
/// triangle is overwritten with L, A = L L^H; the strict upper triangle is
/// left as it was.
FactorizationResult potrf(DistributedMatrix& a, Coordinator& coordinator);

/// Solves A X = B. `a` is given in contiguous layout, redistributed,
/// factorized in place and left block-cyclic. Every device's copy of `b` is
/// overwritten with X. Throws NotPositiveDefinite with the pivot index.
void potrs(DistributedMatrix& a, ReplicatedMatrix& b, Coordinator& coordinator);

/// Overwrites `a` (contiguous in, contiguous out) with its inverse, both
/// triangles filled. Throws NotPositiveDefinite with the pivot index.
void potri(DistributedMatrix& a, Coordinator& coordinator);

struct EigenResult {
  /// Ascending. Stored as double for every element type; values computed
  /// in single precision are represented exactly.
  std::vector<double> eigenvalues;
  /// Contiguous layout; column j pairs with eigenvalues[j]. The shards are
  /// allocated on the mesh and owned by the caller.
  DistributedMatrix eigenvectors;
};

/// Hermitian eigendecomposition: Householder reduction to a real
/// tridiagonal, implicit QR, then back-transformation on the devices.
/// Each eigenvector is scaled so its largest-magnitude entry is real and
/// positive. `a` is destroyed and left block-cyclic.
EigenResult syevd(DistributedMatrix& a, Coordinator& coordinator);

}  // namespace bcmg
