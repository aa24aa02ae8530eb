#include "bcmg/host_api.hpp"

#include <chrono>
#include <complex>
#include <cstring>

#include "bcmg/layout.hpp"
#include "bcmg/solvers.hpp"

namespace bcmg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <Scalar T>
MatrixDescriptor describe(const DenseMatrix<T>& a, Structure s) {
  MatrixDescriptor desc = a.descriptor(s);
  validate_descriptor(desc);
  return desc;
}

DistributedMatrix bind(const MatrixDescriptor& desc, TileSpec tile, std::vector<BufferHandle> shards) {
  DistributedMatrix m{desc, tile, Layout::contiguous, std::move(shards)};
  validate_shards(m);
  return m;
}

template <Scalar T>
ReplicatedMatrix bind_replicated(const DenseMatrix<T>& b, std::vector<BufferHandle> shards) {
  return {b.rows(), b.cols(), element_type_of<T>, std::move(shards)};
}

// Workers publish A (and B when given), then `body` runs as the coordinator
// with the registries in that order.
template <Scalar T, class Body>
auto run_session(const DenseMatrix<T>& a, const DenseMatrix<std::type_identity_t<T>>* b, const RunOptions& options,
                 RunReport* report, Body&& body) {
  DeviceRuntime runtime(options.devices, options.mode, options.arena_capacity);
  HandleRegistry reg_a(runtime.mesh(), options.mode);
  HandleRegistry reg_b(runtime.mesh(), options.mode);

  const auto t_alloc = Clock::now();
  runtime.run_workers([&](Worker& w) {
    publish_columns(w, reg_a, a, options.tile, options.devices);
    if (b != nullptr) publish_replicated(w, reg_b, *b);
  });
  const double alloc_seconds = seconds_since(t_alloc);

  const auto t_solve = Clock::now();
  auto finish = [&](Coordinator& c) {
    if (report != nullptr) {
      report->alloc_seconds = alloc_seconds;
      report->solve_seconds = seconds_since(t_solve);
      report->copy_log = c.mesh().copy_log();
      if (options.capture_snapshot) report->snapshot = c.mesh().snapshot();
    }
  };
  if (b != nullptr) {
    return runtime.run_coordinated({&reg_a, &reg_b}, [&](Coordinator& c) { return body(c, finish); });
  }
  return runtime.run_coordinated({&reg_a}, [&](Coordinator& c) { return body(c, finish); });
}

}  // namespace

template <Scalar T>
void publish_columns(Worker& worker, HandleRegistry& registry, const DenseMatrix<T>& a, TileSpec tile,
                     std::size_t num_devices) {
  validate_tile(tile, a.cols());
  const auto offsets = device_column_offsets(a.cols(), tile, num_devices);
  const auto d = static_cast<std::size_t>(worker.device());
  const std::size_t count = offsets[d + 1] - offsets[d];
  const BufferHandle h = worker.allocate(count * a.rows() * sizeof(T));
  if (count > 0) std::memcpy(worker.bytes(h).data(), a.column(offsets[d]).data(), h.length);
  worker.publish(registry, h);
}

template <Scalar T>
void publish_replicated(Worker& worker, HandleRegistry& registry, const DenseMatrix<T>& b) {
  const BufferHandle h = worker.allocate(b.size() * sizeof(T));
  if (b.size() > 0) std::memcpy(worker.bytes(h).data(), b.data().data(), h.length);
  worker.publish(registry, h);
}

template <Scalar T>
DenseMatrix<T> download_columns(Coordinator& coordinator, const DistributedMatrix& m) {
  if (m.descriptor.element_type != element_type_of<T>) {
    throw Error(Errc::type_structure_mismatch, "download element type differs from the matrix");
  }
  DenseMatrix<T> out(m.descriptor.n_rows, m.descriptor.n_cols);
  for (std::size_t d = 0; d < m.num_devices(); ++d) {
    const auto shard = coordinator.view<T>(m.shards[d]);
    for (std::size_t l = 0; l < m.columns_on(d); ++l) {
      const std::size_t g = m.layout == Layout::block_cyclic
                                ? global_column({d, l}, m.tile, m.num_devices())
                                : device_column_offsets(m.descriptor.n_cols, m.tile, m.num_devices())[d] + l;
      std::copy_n(shard.data() + l * out.rows(), out.rows(), out.column(g).data());
    }
  }
  return out;
}

template <Scalar T>
DenseMatrix<T> download_replica(Coordinator& coordinator, const ReplicatedMatrix& b, std::size_t device) {
  DenseMatrix<T> out(b.n_rows, b.n_cols);
  const auto shard = coordinator.view<T>(b.shards.at(device));
  std::copy_n(shard.data(), out.size(), out.data().data());
  return out;
}

template <Scalar T>
DenseMatrix<T> solve(const DenseMatrix<T>& a, const DenseMatrix<T>& b, const RunOptions& options, RunReport* report) {
  const auto desc = describe(a, Structure::positive_definite);
  validate_tile(options.tile, a.cols());
  validate_rhs({b.rows(), b.cols(), element_type_of<T>}, desc);
  return run_session(a, &b, options, report, [&](Coordinator& c, auto& finish) {
    DistributedMatrix am = bind(desc, options.tile, c.handles(0));
    ReplicatedMatrix bm = bind_replicated(b, c.handles(1));
    potrs(am, bm, c);
    finish(c);
    return download_replica<T>(c, bm);
  });
}

template <Scalar T>
DenseMatrix<T> inverse(const DenseMatrix<T>& a, const RunOptions& options, RunReport* report) {
  const auto desc = describe(a, Structure::positive_definite);
  validate_tile(options.tile, a.cols());
  return run_session(a, nullptr, options, report, [&](Coordinator& c, auto& finish) {
    DistributedMatrix am = bind(desc, options.tile, c.handles(0));
    potri(am, c);
    finish(c);
    return download_columns<T>(c, am);
  });
}

template <Scalar T>
CholeskyOutput<T> cholesky(const DenseMatrix<T>& a, const RunOptions& options, RunReport* report) {
  const auto desc = describe(a, Structure::positive_definite);
  validate_tile(options.tile, a.cols());
  return run_session(a, nullptr, options, report, [&](Coordinator& c, auto& finish) {
    DistributedMatrix am = bind(desc, options.tile, c.handles(0));
    StagingPair staging = allocate_staging_pair(c, desc.column_bytes());
    redistribute_in(am, c, &staging);
    const auto result = potrf(am, c);
    redistribute_out(am, c, &staging);
    finish(c);
    return CholeskyOutput<T>{download_columns<T>(c, am), result.info};
  });
}

template <Scalar T>
EighOutput<T> eigh(const DenseMatrix<T>& a, const RunOptions& options, RunReport* report) {
  const auto desc = describe(a, ScalarTraits<T>::is_complex ? Structure::hermitian : Structure::symmetric);
  validate_tile(options.tile, a.cols());
  return run_session(a, nullptr, options, report, [&](Coordinator& c, auto& finish) {
    DistributedMatrix am = bind(desc, options.tile, c.handles(0));
    EigenResult r = syevd(am, c);
    finish(c);
    EighOutput<T> out;
    out.values.assign(r.eigenvalues.begin(), r.eigenvalues.end());
    out.vectors = download_columns<T>(c, r.eigenvectors);
    return out;
  });
}

#define BCMG_INSTANTIATE(T)                                                                                   \
  template void publish_columns<T>(Worker&, HandleRegistry&, const DenseMatrix<T>&, TileSpec, std::size_t);   \
  template void publish_replicated<T>(Worker&, HandleRegistry&, const DenseMatrix<T>&);                       \
  template DenseMatrix<T> download_columns<T>(Coordinator&, const DistributedMatrix&);                        \
  template DenseMatrix<T> download_replica<T>(Coordinator&, const ReplicatedMatrix&, std::size_t);            \
  template DenseMatrix<T> solve<T>(const DenseMatrix<T>&, const DenseMatrix<T>&, const RunOptions&, RunReport*); \
  template DenseMatrix<T> inverse<T>(const DenseMatrix<T>&, const RunOptions&, RunReport*);                   \
  template CholeskyOutput<T> cholesky<T>(const DenseMatrix<T>&, const RunOptions&, RunReport*);               \
  template EighOutput<T> eigh<T>(const DenseMatrix<T>&, const RunOptions&, RunReport*);

BCMG_INSTANTIATE(float)
BCMG_INSTANTIATE(double)
BCMG_INSTANTIATE(std::complex<float>)
BCMG_INSTANTIATE(std::complex<double>)

}  // namespace bcmg
