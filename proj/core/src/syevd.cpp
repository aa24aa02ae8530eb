#include <algorithm>
#include <cmath>

#include "bcmg/layout.hpp"
#include "bcmg/solvers.hpp"
#include "bcmg/tridiagonal.hpp"
#include "cyclic_view.hpp"
#include "kernels.hpp"

namespace bcmg {

namespace {

using detail::CyclicView;

struct SyevdWorkspace {
  std::vector<ScopedBuffer> reflector;  // per device: u then w, n elements each
  std::vector<ScopedBuffer> partial;    // per device: one p entry per owned column
  std::vector<ScopedBuffer> vectors;    // per device: eigenvector shard
  ScopedBuffer column;                  // scratch: n elements
  ScopedBuffer u;
  ScopedBuffer w;
  ScopedBuffer p;
  ScopedBuffer rotations;  // scratch: n x n reals
  StagingPair staging;
};

SyevdWorkspace allocate_workspace(const DistributedMatrix& a, Coordinator& c) {
  const std::size_t n = a.descriptor.n_rows;
  const std::size_t sz = element_size(a.descriptor.element_type);
  const std::size_t real_sz = is_complex(a.descriptor.element_type) ? sz / 2 : sz;
  SyevdWorkspace ws;
  for (std::size_t d = 0; d < a.num_devices(); ++d) {
    const int dev = static_cast<int>(d);
    ws.reflector.push_back(c.allocate(dev, 2 * n * sz));
    ws.partial.push_back(c.allocate(dev, a.columns_on(d) * sz));
    ws.vectors.push_back(c.allocate(dev, a.columns_on(d) * n * sz));
  }
  ws.column = c.allocate(kScratchDevice, n * sz);
  ws.u = c.allocate(kScratchDevice, n * sz);
  ws.w = c.allocate(kScratchDevice, n * sz);
  ws.p = c.allocate(kScratchDevice, n * sz);
  ws.rotations = c.allocate(kScratchDevice, n * n * real_sz);
  ws.staging = allocate_staging_pair(c, n * sz);
  return ws;
}

template <Scalar T>
std::vector<double> solve_typed(DistributedMatrix& a, DistributedMatrix& v, SyevdWorkspace& ws, Coordinator& c) {
  using R = real_t<T>;
  CyclicView<T> view(a, c);
  const std::size_t n = view.n;
  const std::size_t num_devices = view.num_devices;
  constexpr std::size_t sz = sizeof(T);

  T* col = c.view<T>(*ws.column).data();
  T* u = c.view<T>(*ws.u).data();
  T* w = c.view<T>(*ws.w).data();
  T* p = c.view<T>(*ws.p).data();
  std::vector<T*> dev_u(num_devices);
  std::vector<T*> dev_p(num_devices);
  for (std::size_t d = 0; d < num_devices; ++d) {
    dev_u[d] = c.view<T>(*ws.reflector[d]).data();
    dev_p[d] = c.view<T>(*ws.partial[d]).data();
  }
  auto broadcast = [&](const BufferHandle& src, std::size_t slot, std::size_t row0, std::size_t first_col) {
    for (std::size_t d = 0; d < num_devices; ++d) {
      if (view.first_local_at_or_after(d, first_col) == view.columns_on(d)) continue;
      c.peer_copy(src, row0 * sz, *ws.reflector[d], (slot * n + row0) * sz, (n - row0) * sz);
    }
  };

  // Only the lower triangle is input; rebuild the upper one from it.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    view.copy_column(c, k, k, *ws.column);
    broadcast(*ws.column, 0, k, k + 1);
    for (std::size_t d = 0; d < num_devices; ++d) {
      for (std::size_t l = view.first_local_at_or_after(d, k + 1); l < view.columns_on(d); ++l) {
        view.column(d, l)[k] = conj(dev_u[d][view.globals[d][l]]);
      }
    }
  }
  for (std::size_t d = 0; d < num_devices; ++d) {
    for (std::size_t l = 0; l < view.columns_on(d); ++l) {
      T& diag_entry = view.column(d, l)[view.globals[d][l]];
      diag_entry = T(real_part(diag_entry));
    }
  }

  std::vector<R> diag(n);
  std::vector<T> sub(n > 1 ? n - 1 : 0);
  std::vector<R> tau(n, R(0));

  // Householder reduction. Step k annihilates column k below row k + 1;
  // the reflector u (u[k+1] = 1) is kept in column k from row k + 1 down.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    view.copy_column(c, k, k, *ws.column);
    diag[k] = real_part(col[k]);
    const T alpha = col[k + 1];
    R tail = 0;
    for (std::size_t i = k + 2; i < n; ++i) tail = std::hypot(tail, magnitude(col[i]));
    if (tail == 0) {
      sub[k] = alpha;
      continue;
    }
    const R norm = std::hypot(magnitude(alpha), tail);
    const T beta = kernels::scale(kernels::phase_of(alpha), -norm);
    const T denom = alpha - beta;
    R unorm2 = 1;
    u[k + 1] = T(1);
    for (std::size_t i = k + 2; i < n; ++i) {
      u[i] = col[i] / denom;
      unorm2 += abs2(u[i]);
    }
    tau[k] = R(2) / unorm2;
    sub[k] = beta;

    const auto own = view.owner(k);
    c.peer_copy(*ws.u, (k + 1) * sz, a.shards[own.device], (own.local_column * n + k + 1) * sz, (n - k - 1) * sz);
    broadcast(*ws.u, 0, k + 1, k + 1);

    // p = tau A22 u, one entry per owned column (A22 is Hermitian).
    for (std::size_t d = 0; d < num_devices; ++d) {
      for (std::size_t l = view.first_local_at_or_after(d, k + 1); l < view.columns_on(d); ++l) {
        const T* cg = view.column(d, l);
        dev_p[d][l] = kernels::scale(kernels::dotc(cg + k + 1, dev_u[d] + k + 1, n - k - 1), tau[k]);
      }
    }
    for (std::size_t d = 0; d < num_devices; ++d) {
      std::size_t l = view.first_local_at_or_after(d, k + 1);
      while (l < view.columns_on(d)) {
        std::size_t run = 1;
        while (l + run < view.columns_on(d) && view.globals[d][l + run] == view.globals[d][l] + run) ++run;
        c.peer_copy(*ws.partial[d], l * sz, *ws.p, view.globals[d][l] * sz, run * sz);
        l += run;
      }
    }
    // w = p - (tau/2)(u^H p) u
    const R half_k = tau[k] / 2 * real_part(kernels::dotc(u + k + 1, p + k + 1, n - k - 1));
    for (std::size_t i = k + 1; i < n; ++i) w[i] = p[i] - kernels::scale(u[i], half_k);
    broadcast(*ws.w, 1, k + 1, k + 1);

    // A22 -= u w^H + w u^H
    for (std::size_t d = 0; d < num_devices; ++d) {
      const T* du = dev_u[d];
      const T* dw = dev_u[d] + n;
      for (std::size_t l = view.first_local_at_or_after(d, k + 1); l < view.columns_on(d); ++l) {
        const std::size_t g = view.globals[d][l];
        T* cg = view.column(d, l);
        kernels::axpy_minus(cg + k + 1, du + k + 1, conj(dw[g]), n - k - 1);
        kernels::axpy_minus(cg + k + 1, dw + k + 1, conj(du[g]), n - k - 1);
      }
    }
  }
  view.copy_column(c, n - 1, n - 1, *ws.column);
  diag[n - 1] = real_part(col[n - 1]);

  // Diagonal similarity making the sub-diagonal real and non-negative.
  std::vector<T> phase(n, T(1));
  std::vector<R> offdiag(sub.size());
  for (std::size_t k = 0; k < sub.size(); ++k) {
    offdiag[k] = magnitude(sub[k]);
    phase[k + 1] = kernels::mul(phase[k], kernels::phase_of(sub[k]));
  }

  std::span<R> z = c.view<R>(*ws.rotations).first(n * n);
  std::fill(z.begin(), z.end(), R(0));
  for (std::size_t i = 0; i < n; ++i) z[i * n + i] = R(1);
  tridiagonal_eigen<R>(diag, offdiag, z);

  // V = D Z, then the reflectors in reverse order.
  CyclicView<T> vview(v, c);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t r = 0; r < n; ++r) col[r] = kernels::scale(phase[r], z[j * n + r]);
    const auto own = vview.owner(j);
    c.peer_copy(*ws.column, 0, v.shards[own.device], own.local_column * n * sz, n * sz);
  }
  for (std::size_t k = n >= 2 ? n - 1 : 0; k-- > 0;) {
    if (tau[k] == 0) continue;
    const auto own = view.owner(k);
    for (std::size_t d = 0; d < num_devices; ++d) {
      if (vview.columns_on(d) == 0) continue;
      c.peer_copy(a.shards[own.device], (own.local_column * n + k + 1) * sz, *ws.reflector[d], (k + 1) * sz,
                  (n - k - 1) * sz);
      const T* du = dev_u[d];
      for (std::size_t l = 0; l < vview.columns_on(d); ++l) {
        T* vj = vview.column(d, l);
        const T s = kernels::scale(kernels::dotc(du + k + 1, vj + k + 1, n - k - 1), tau[k]);
        kernels::axpy_minus(vj + k + 1, du + k + 1, s, n - k - 1);
      }
    }
  }

  for (std::size_t d = 0; d < num_devices; ++d) {
    for (std::size_t l = 0; l < vview.columns_on(d); ++l) {
      T* vj = vview.column(d, l);
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (abs2(vj[i]) > abs2(vj[best])) best = i;
      }
      const T fix = conj(kernels::phase_of(vj[best]));
      for (std::size_t i = 0; i < n; ++i) vj[i] = kernels::mul(vj[i], fix);
      vj[best] = T(real_part(vj[best]));
    }
  }

  return {diag.begin(), diag.end()};
}

}  // namespace

WorkspaceRequirement syevd_workspace(const MatrixDescriptor& a, TileSpec tile, std::size_t num_devices) {
  const std::size_t n = a.n_rows;
  const std::size_t sz = element_size(a.element_type);
  const std::size_t real_sz = is_complex(a.element_type) ? sz / 2 : sz;
  WorkspaceRequirement req;
  for (std::size_t d = 0; d < num_devices; ++d) {
    const std::size_t cols = columns_on_device(a.n_cols, tile, num_devices, d);
    req.device_bytes.push_back(2 * n * sz + cols * sz + cols * n * sz);
  }
  req.scratch_bytes = 4 * n * sz + n * n * real_sz + RedistributionPlan::staging_buffer_count * n * sz;
  return req;
}

EigenResult syevd(DistributedMatrix& a, Coordinator& coordinator) {
  validate_shards(a);
  validate_descriptor(a.descriptor);
  if (!a.descriptor.square()) throw Error(Errc::dimension_mismatch, "eigensolver needs a square matrix");
  if (a.descriptor.structure == Structure::general) {
    throw Error(Errc::type_structure_mismatch, "eigensolver needs a symmetric or Hermitian matrix");
  }
  if (a.layout != Layout::contiguous) throw Error(Errc::invalid_argument, "syevd takes A in contiguous layout");

  SyevdWorkspace ws = allocate_workspace(a, coordinator);
  redistribute_in(a, coordinator, &ws.staging);

  DistributedMatrix v;
  v.descriptor = a.descriptor;
  v.descriptor.structure = Structure::general;
  v.tile = a.tile;
  v.layout = Layout::block_cyclic;
  for (const auto& s : ws.vectors) v.shards.push_back(*s);

  EigenResult result;
  result.eigenvalues = visit_element_type(a.descriptor.element_type, [&]<class T>(std::type_identity<T>) {
    return solve_typed<T>(a, v, ws, coordinator);
  });
  redistribute_out(v, coordinator, &ws.staging);
  for (auto& s : ws.vectors) s.release();
  result.eigenvectors = std::move(v);
  return result;
}

}  // namespace bcmg
