#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "bcmg/distributed_matrix.hpp"
#include "bcmg/layout.hpp"
#include "bcmg/runtime.hpp"

namespace bcmg::detail {

// Coordinator-side view of a block-cyclic matrix: per-device column
// pointers plus the local -> global column map.
template <class T>
struct CyclicView {
  const DistributedMatrix* matrix;
  std::size_t n;
  std::size_t tile;
  std::size_t num_devices;
  std::vector<std::vector<std::size_t>> globals;
  std::vector<T*> base;

  CyclicView(DistributedMatrix& a, Coordinator& c)
      : matrix(&a), n(a.descriptor.n_rows), tile(a.tile.width), num_devices(a.num_devices()) {
    globals.resize(num_devices);
    base.resize(num_devices);
    for (std::size_t d = 0; d < num_devices; ++d) {
      const std::size_t count = a.columns_on(d);
      globals[d].resize(count);
      for (std::size_t l = 0; l < count; ++l) globals[d][l] = global_column({d, l}, a.tile, num_devices);
      base[d] = c.view<T>(a.shards[d]).data();
    }
  }

  std::size_t columns_on(std::size_t d) const { return globals[d].size(); }
  T* column(std::size_t d, std::size_t l) const { return base[d] + l * n; }

  std::size_t first_local_at_or_after(std::size_t d, std::size_t g) const {
    return static_cast<std::size_t>(std::lower_bound(globals[d].begin(), globals[d].end(), g) - globals[d].begin());
  }

  ColumnPlacement owner(std::size_t g) const { return map_column(g, n, matrix->tile, num_devices); }

  // Columns [k0, k0 + w) of one tile, rows [row0, n), into `dst` laid out
  // as w columns of n elements.
  void copy_panel(Coordinator& c, std::size_t k0, std::size_t w, std::size_t row0, const BufferHandle& dst) const {
    const auto own = owner(k0);
    for (std::size_t j = 0; j < w; ++j) {
      c.peer_copy(matrix->shards[own.device], ((own.local_column + j) * n + row0) * sizeof(T), dst,
                  (j * n + row0) * sizeof(T), (n - row0) * sizeof(T));
    }
  }

  // One column, rows [row0, n), into `dst` at element offset dst_elem + row0.
  void copy_column(Coordinator& c, std::size_t g, std::size_t row0, const BufferHandle& dst,
                   std::size_t dst_elem = 0) const {
    const auto own = owner(g);
    c.peer_copy(matrix->shards[own.device], (own.local_column * n + row0) * sizeof(T), dst,
                (dst_elem + row0) * sizeof(T), (n - row0) * sizeof(T));
  }
};

}  // namespace bcmg::detail
