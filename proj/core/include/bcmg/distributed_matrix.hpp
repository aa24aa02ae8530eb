#pragma once

#include <cstddef>
#include <vector>

#include "bcmg/descriptor.hpp"
#include "bcmg/runtime.hpp"

namespace bcmg {

enum class Layout {
  contiguous,    // device d holds one run of consecutive global columns
  block_cyclic,  // tiles of T_A columns dealt round-robin over devices
};

/// A column-sharded matrix. Under either layout device d holds the same
/// number of columns (the block-cyclic count), so switching layouts never
/// changes shard sizes.
struct DistributedMatrix {
  MatrixDescriptor descriptor;
  TileSpec tile;
  Layout layout = Layout::contiguous;
  std::vector<BufferHandle> shards;

  std::size_t num_devices() const noexcept { return shards.size(); }
  std::size_t columns_on(std::size_t device) const;
};

/// Shard byte lengths must equal column count x n_rows x element width.
void validate_shards(const DistributedMatrix& m);

struct ShardColumn {
  std::size_t device = 0;
  std::size_t local_column = 0;
};

/// Where global column `col` lives under the matrix's current layout.
ShardColumn locate(const DistributedMatrix& m, std::size_t col);

/// An N x NRHS matrix stored identically on every device.
struct ReplicatedMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  ElementType element_type = ElementType::real64;
  std::vector<BufferHandle> shards;

  std::size_t bytes() const noexcept { return n_rows * n_cols * element_size(element_type); }
};

}  // namespace bcmg
