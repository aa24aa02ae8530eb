#include <algorithm>
#include <cmath>
#include <string>

#include "bcmg/layout.hpp"
#include "bcmg/solvers.hpp"
#include "cyclic_view.hpp"
#include "kernels.hpp"

namespace bcmg {

namespace {

using detail::CyclicView;

void require_square_pd(const DistributedMatrix& a) {
  validate_shards(a);
  if (!a.descriptor.square()) throw Error(Errc::dimension_mismatch, "Cholesky routines need a square matrix");
  if (a.descriptor.structure != Structure::positive_definite) {
    throw Error(Errc::type_structure_mismatch, "Cholesky routines need a matrix tagged positive definite");
  }
}

std::vector<std::size_t> panel_bytes_per_device(const MatrixDescriptor& a, TileSpec tile, std::size_t num_devices) {
  return std::vector<std::size_t>(num_devices, a.n_rows * tile.width * element_size(a.element_type));
}

template <Scalar T>
std::size_t factor_tiles(DistributedMatrix& a, Coordinator& c, std::span<const ScopedBuffer> panels) {
  CyclicView<T> view(a, c);
  const std::size_t n = view.n;
  const std::size_t num_devices = view.num_devices;
  std::vector<T*> panel(num_devices);
  for (std::size_t d = 0; d < num_devices; ++d) panel[d] = c.view<T>(*panels[d]).data();

  for (std::size_t k0 = 0; k0 < n; k0 += view.tile) {
    const std::size_t w = std::min(view.tile, n - k0);
    const std::size_t k_end = k0 + w;
    const auto owner = map_column(k0, n, a.tile, num_devices);

    // Diagonal block and the panel below it, on the owning device.
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t g = k0 + j;
      T* cj = view.column(owner.device, owner.local_column + j);
      const real_t<T> pivot = real_part(cj[g]);
      if (!(pivot > 0)) return g + 1;
      const real_t<T> ljj = std::sqrt(pivot);
      cj[g] = T(ljj);
      kernels::divide_real(cj + g + 1, ljj, n - g - 1);
      for (std::size_t jj = j + 1; jj < w; ++jj) {
        const std::size_t g2 = k0 + jj;
        const T m = conj(cj[g2]);
        if (kernels::is_zero(m)) continue;
        kernels::axpy_minus(view.column(owner.device, owner.local_column + jj) + g2, cj + g2, m, n - g2);
      }
    }
    if (k_end == n) break;

    for (std::size_t d = 0; d < num_devices; ++d) {
      if (view.first_local_at_or_after(d, k_end) == view.columns_on(d)) continue;
      view.copy_panel(c, k0, w, k0, *panels[d]);
    }

    // Trailing update: every device updates its own columns right of the panel.
    for (std::size_t d = 0; d < num_devices; ++d) {
      for (std::size_t l = view.first_local_at_or_after(d, k_end); l < view.columns_on(d); ++l) {
        const std::size_t g = view.globals[d][l];
        T* cg = view.column(d, l);
        for (std::size_t p = 0; p < w; ++p) {
          const T* lp = panel[d] + p * n;
          const T m = conj(lp[g]);
          if (kernels::is_zero(m)) continue;
          kernels::axpy_minus(cg + g, lp + g, m, n - g);
        }
      }
    }
  }
  return 0;
}

template <Scalar T>
void substitute(DistributedMatrix& a, ReplicatedMatrix& b, Coordinator& c, const BufferHandle& x_buf,
                const BufferHandle& panel_buf) {
  CyclicView<T> view(a, c);
  const std::size_t n = view.n;
  const std::size_t nrhs = b.n_cols;
  T* x = c.view<T>(x_buf).data();
  const T* panel = c.view<T>(panel_buf).data();

  c.peer_copy(b.shards[0], 0, x_buf, 0, b.bytes());

  // L Y = B
  for (std::size_t k0 = 0; k0 < n; k0 += view.tile) {
    const std::size_t w = std::min(view.tile, n - k0);
    view.copy_panel(c, k0, w, k0, panel_buf);
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t g = k0 + j;
      const T* lp = panel + j * n;
      const real_t<T> diag = real_part(lp[g]);
      for (std::size_t r = 0; r < nrhs; ++r) {
        T* xr = x + r * n;
        xr[g] = div_real(xr[g], diag);
        kernels::axpy_minus(xr + g + 1, lp + g + 1, xr[g], n - g - 1);
      }
    }
  }
  // L^H X = Y
  const std::size_t n_tiles = (n + view.tile - 1) / view.tile;
  for (std::size_t t = n_tiles; t-- > 0;) {
    const std::size_t k0 = t * view.tile;
    const std::size_t w = std::min(view.tile, n - k0);
    view.copy_panel(c, k0, w, k0, panel_buf);
    for (std::size_t j = w; j-- > 0;) {
      const std::size_t g = k0 + j;
      const T* lp = panel + j * n;
      const real_t<T> diag = real_part(lp[g]);
      for (std::size_t r = 0; r < nrhs; ++r) {
        T* xr = x + r * n;
        xr[g] = div_real(xr[g] - kernels::dotc(lp + g + 1, xr + g + 1, n - g - 1), diag);
      }
    }
  }

  for (std::size_t d = 0; d < b.shards.size(); ++d) c.peer_copy(x_buf, 0, b.shards[d], 0, b.bytes());
}

// With L already in the lower triangle of a block-cyclic `a`, overwrites
// `a` with L^{-H} L^{-1}, both triangles.
template <Scalar T>
void invert_from_factor(DistributedMatrix& a, Coordinator& c, std::span<const ScopedBuffer> panels) {
  CyclicView<T> view(a, c);
  const std::size_t n = view.n;
  const std::size_t num_devices = view.num_devices;
  std::vector<T*> panel(num_devices);
  for (std::size_t d = 0; d < num_devices; ++d) panel[d] = c.view<T>(*panels[d]).data();

  auto broadcast = [&](std::size_t k0, std::size_t w) {
    for (std::size_t d = 0; d < num_devices; ++d) {
      if (view.columns_on(d) > 0) view.copy_panel(c, k0, w, k0, *panels[d]);
    }
  };

  // X = L^{-1}, column by column in place. Column g of X is non-zero only
  // from row g down, so block row k touches columns left of the tile end;
  // a column is reset to e_g once its own panel has been broadcast.
  for (std::size_t k0 = 0; k0 < n; k0 += view.tile) {
    const std::size_t w = std::min(view.tile, n - k0);
    const std::size_t k_end = k0 + w;
    broadcast(k0, w);
    for (std::size_t d = 0; d < num_devices; ++d) {
      const std::size_t l_end = view.first_local_at_or_after(d, k_end);
      for (std::size_t l = 0; l < l_end; ++l) {
        const std::size_t g = view.globals[d][l];
        T* xg = view.column(d, l);
        if (g >= k0) {
          std::fill(xg, xg + n, T{});
          xg[g] = T(1);
        }
        for (std::size_t p = std::max(k0, g); p < k_end; ++p) {
          const T* lp = panel[d] + (p - k0) * n;
          xg[p] = div_real(xg[p], real_part(lp[p]));
          if (kernels::is_zero(xg[p])) continue;
          kernels::axpy_minus(xg + p + 1, lp + p + 1, xg[p], n - p - 1);
        }
      }
    }
  }

  // C = X^H X, lower triangle: C(i, g) = sum_{r >= i} conj(X(r, i)) X(r, g).
  for (std::size_t k0 = 0; k0 < n; k0 += view.tile) {
    const std::size_t w = std::min(view.tile, n - k0);
    const std::size_t k_end = k0 + w;
    broadcast(k0, w);
    for (std::size_t d = 0; d < num_devices; ++d) {
      const std::size_t l_end = view.first_local_at_or_after(d, k_end);
      for (std::size_t l = 0; l < l_end; ++l) {
        const std::size_t g = view.globals[d][l];
        T* xg = view.column(d, l);
        for (std::size_t i = std::max(k0, g); i < k_end; ++i) {
          const T* xi = panel[d] + (i - k0) * n;
          xg[i] = kernels::dotc(xi + i, xg + i, n - i);
        }
        if (g >= k0) xg[g] = T(real_part(xg[g]));
      }
    }
  }

  // Mirror the lower triangle into the upper one.
  for (std::size_t k0 = 0; k0 < n; k0 += view.tile) {
    const std::size_t w = std::min(view.tile, n - k0);
    broadcast(k0, w);
    for (std::size_t d = 0; d < num_devices; ++d) {
      for (std::size_t l = view.first_local_at_or_after(d, k0 + 1); l < view.columns_on(d); ++l) {
        const std::size_t g = view.globals[d][l];
        T* cg = view.column(d, l);
        for (std::size_t j = k0; j < std::min(k0 + w, g); ++j) cg[j] = conj(panel[d][(j - k0) * n + g]);
      }
    }
  }
}

std::vector<ScopedBuffer> allocate_per_device(Coordinator& c, const std::vector<std::size_t>& bytes) {
  std::vector<ScopedBuffer> out;
  out.reserve(bytes.size());
  for (std::size_t d = 0; d < bytes.size(); ++d) out.push_back(c.allocate(int(d), bytes[d]));
  return out;
}

}  // namespace

void redistribute_in(DistributedMatrix& a, Coordinator& coordinator, StagingPair* staging) {
  if (a.layout != Layout::contiguous) throw Error(Errc::invalid_argument, "matrix is already block-cyclic");
  const auto plan = decompose_cycles(build_permutation(a.descriptor.n_cols, a.tile, a.num_devices()));
  execute_plan(a, plan, coordinator, staging);
}

void redistribute_out(DistributedMatrix& a, Coordinator& coordinator, StagingPair* staging) {
  if (a.layout != Layout::block_cyclic) throw Error(Errc::invalid_argument, "matrix is already contiguous");
  const auto plan = invert_plan(decompose_cycles(build_permutation(a.descriptor.n_cols, a.tile, a.num_devices())));
  execute_plan(a, plan, coordinator, staging);
}

WorkspaceRequirement potrf_workspace(const MatrixDescriptor& a, TileSpec tile, std::size_t num_devices) {
  return {panel_bytes_per_device(a, tile, num_devices), 0};
}

WorkspaceRequirement potrs_workspace(const MatrixDescriptor& a, TileSpec tile, std::size_t num_devices,
                                     std::size_t n_rhs) {
  const std::size_t col = a.column_bytes();
  return {panel_bytes_per_device(a, tile, num_devices),
          RedistributionPlan::staging_buffer_count * col + n_rhs * col + tile.width * col};
}

WorkspaceRequirement potri_workspace(const MatrixDescriptor& a, TileSpec tile, std::size_t num_devices) {
  return {panel_bytes_per_device(a, tile, num_devices), RedistributionPlan::staging_buffer_count * a.column_bytes()};
}

FactorizationResult potrf(DistributedMatrix& a, Coordinator& coordinator) {
  require_square_pd(a);
  if (a.layout != Layout::block_cyclic) throw Error(Errc::invalid_argument, "potrf needs a block-cyclic matrix");
  auto panels = allocate_per_device(coordinator, potrf_workspace(a.descriptor, a.tile, a.num_devices()).device_bytes);
  return visit_element_type(a.descriptor.element_type, [&]<class T>(std::type_identity<T>) {
    return FactorizationResult{factor_tiles<T>(a, coordinator, panels)};
  });
}

void potrs(DistributedMatrix& a, ReplicatedMatrix& b, Coordinator& coordinator) {
  require_square_pd(a);
  if (a.layout != Layout::contiguous) throw Error(Errc::invalid_argument, "potrs takes A in contiguous layout");
  validate_rhs({b.n_rows, b.n_cols, b.element_type}, a.descriptor);
  if (b.shards.size() != a.num_devices()) {
    throw Error(Errc::dimension_mismatch, "right-hand side must be replicated on every device");
  }
  for (const auto& s : b.shards) {
    if (s.length != b.bytes()) throw Error(Errc::dimension_mismatch, "right-hand side replica has the wrong size");
  }

  const auto req = potrs_workspace(a.descriptor, a.tile, a.num_devices(), b.n_cols);
  const std::size_t col = a.descriptor.column_bytes();
  auto panels = allocate_per_device(coordinator, req.device_bytes);
  StagingPair staging = allocate_staging_pair(coordinator, col);
  ScopedBuffer x = coordinator.allocate(kScratchDevice, b.bytes());
  ScopedBuffer panel = coordinator.allocate(kScratchDevice, a.tile.width * col);

  redistribute_in(a, coordinator, &staging);
  visit_element_type(a.descriptor.element_type, [&]<class T>(std::type_identity<T>) {
    if (const auto info = factor_tiles<T>(a, coordinator, panels); info != 0) throw NotPositiveDefinite(info);
    substitute<T>(a, b, coordinator, *x, *panel);
  });
}

void potri(DistributedMatrix& a, Coordinator& coordinator) {
  require_square_pd(a);
  if (a.layout != Layout::contiguous) throw Error(Errc::invalid_argument, "potri takes A in contiguous layout");
  const auto req = potri_workspace(a.descriptor, a.tile, a.num_devices());
  auto panels = allocate_per_device(coordinator, req.device_bytes);
  StagingPair staging = allocate_staging_pair(coordinator, a.descriptor.column_bytes());

  redistribute_in(a, coordinator, &staging);
  visit_element_type(a.descriptor.element_type, [&]<class T>(std::type_identity<T>) {
    if (const auto info = factor_tiles<T>(a, coordinator, panels); info != 0) throw NotPositiveDefinite(info);
    invert_from_factor<T>(a, coordinator, panels);
  });
  redistribute_out(a, coordinator, &staging);
}

}  // namespace bcmg
