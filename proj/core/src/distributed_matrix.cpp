#include "bcmg/distributed_matrix.hpp"

#include <algorithm>
#include <string>

#include "bcmg/layout.hpp"

namespace bcmg {

std::size_t DistributedMatrix::columns_on(std::size_t device) const {
  return columns_on_device(descriptor.n_cols, tile, num_devices(), device);
}

void validate_shards(const DistributedMatrix& m) {
  validate_descriptor(m.descriptor);
  validate_tile(m.tile, m.descriptor.n_cols);
  if (m.shards.empty()) throw Error(Errc::invalid_argument, "distributed matrix has no shards");
  for (std::size_t d = 0; d < m.num_devices(); ++d) {
    const std::size_t expected = m.columns_on(d) * m.descriptor.column_bytes();
    if (m.shards[d].length != expected || m.shards[d].device != static_cast<int>(d)) {
      throw Error(Errc::dimension_mismatch, "shard " + std::to_string(d) + " holds " +
                                                std::to_string(m.shards[d].length) + " bytes, layout needs " +
                                                std::to_string(expected));
    }
  }
}

ShardColumn locate(const DistributedMatrix& m, std::size_t col) {
  if (m.layout == Layout::block_cyclic) {
    const auto p = map_column(col, m.descriptor.n_cols, m.tile, m.num_devices());
    return {p.device, p.local_column};
  }
  if (col >= m.descriptor.n_cols) throw Error(Errc::out_of_range, "column " + std::to_string(col));
  const auto offsets = device_column_offsets(m.descriptor.n_cols, m.tile, m.num_devices());
  const auto it = std::upper_bound(offsets.begin(), offsets.end(), col);
  const auto device = static_cast<std::size_t>(it - offsets.begin()) - 1;
  return {device, col - offsets[device]};
}

}  // namespace bcmg
