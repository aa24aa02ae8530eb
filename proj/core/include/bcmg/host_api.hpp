#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "bcmg/dense_matrix.hpp"
#include "bcmg/distributed_matrix.hpp"
#include "bcmg/runtime.hpp"

// Host-array entry points: copy a host matrix onto a fresh mesh through
// the worker/coordinator protocol, run one routine, copy the result back.
// The CLI and any foreign-language front end go through these.
namespace bcmg {

struct RunOptions {
  TileSpec tile{64};
  std::size_t devices = 1;
  CoordinationMode mode = CoordinationMode::shared_address;
  std::size_t arena_capacity = kUnlimited;
  /// Record every live allocation on the mesh right after the routine.
  bool capture_snapshot = false;
};

struct RunReport {
  /// Wall-clock time for workers to allocate and fill their shards.
  double alloc_seconds = 0;
  /// Wall-clock time of the coordinated routine, including its workspace
  /// allocation and redistributions.
  double solve_seconds = 0;
  std::vector<CopyRecord> copy_log;
  std::optional<MeshSnapshot> snapshot;
};

/// Contiguous column split of `a` for this worker's device, published to
/// `registry`. Call from inside a worker body.
template <Scalar T>
void publish_columns(Worker& worker, HandleRegistry& registry, const DenseMatrix<T>& a, TileSpec tile,
                     std::size_t num_devices);

/// A full copy of `b` on this worker's device, published to `registry`.
template <Scalar T>
void publish_replicated(Worker& worker, HandleRegistry& registry, const DenseMatrix<T>& b);

/// Gathers a distributed matrix (either layout) into host memory.
template <Scalar T>
DenseMatrix<T> download_columns(Coordinator& coordinator, const DistributedMatrix& m);

template <Scalar T>
DenseMatrix<T> download_replica(Coordinator& coordinator, const ReplicatedMatrix& b, std::size_t device = 0);

/// X with A X = B. Throws NotPositiveDefinite.
template <Scalar T>
DenseMatrix<T> solve(const DenseMatrix<T>& a, const DenseMatrix<T>& b, const RunOptions& options,
                     RunReport* report = nullptr);

/// A^{-1}, both triangles. Throws NotPositiveDefinite.
template <Scalar T>
DenseMatrix<T> inverse(const DenseMatrix<T>& a, const RunOptions& options, RunReport* report = nullptr);

template <Scalar T>
struct CholeskyOutput {
  /// Lower triangle holds L; above the diagonal is A's upper triangle.
  DenseMatrix<T> factor;
  std::size_t info = 0;
};

template <Scalar T>
CholeskyOutput<T> cholesky(const DenseMatrix<T>& a, const RunOptions& options, RunReport* report = nullptr);

template <Scalar T>
struct EighOutput {
  std::vector<real_t<T>> values;
  DenseMatrix<T> vectors;
};

template <Scalar T>
EighOutput<T> eigh(const DenseMatrix<T>& a, const RunOptions& options, RunReport* report = nullptr);

}  // namespace bcmg
