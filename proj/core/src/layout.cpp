#include "bcmg/layout.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace bcmg {

namespace {

void check_grid(TileSpec tile, std::size_t num_devices) {
  if (tile.width == 0) throw Error(Errc::invalid_argument, "tile width must be positive");
  if (num_devices == 0) throw Error(Errc::invalid_argument, "at least one device is required");
}

struct Slot {
  std::size_t device;
  std::size_t byte_offset;
};

}  // namespace

ColumnPlacement map_column(std::size_t global_col, std::size_t n_cols, TileSpec tile, std::size_t num_devices) {
  check_grid(tile, num_devices);
  if (global_col >= n_cols) {
    throw Error(Errc::out_of_range,
                "column " + std::to_string(global_col) + " outside [0, " + std::to_string(n_cols) + ")");
  }
  const std::size_t t = global_col / tile.width;
  return {t % num_devices, (t / num_devices) * tile.width + global_col % tile.width};
}

std::size_t global_column(ColumnPlacement placement, TileSpec tile, std::size_t num_devices) {
  check_grid(tile, num_devices);
  const std::size_t slot = placement.local_column / tile.width;
  const std::size_t t = slot * num_devices + placement.device;
  return t * tile.width + placement.local_column % tile.width;
}

std::size_t columns_on_device(std::size_t n_cols, TileSpec tile, std::size_t num_devices, std::size_t device) {
  check_grid(tile, num_devices);
  if (n_cols == 0) return 0;
  const std::size_t n_tiles = (n_cols + tile.width - 1) / tile.width;
  std::size_t count = (n_tiles / num_devices) * tile.width;
  if (device < n_tiles % num_devices) count += tile.width;
  if ((n_tiles - 1) % num_devices == device) count -= n_tiles * tile.width - n_cols;
  return count;
}

std::vector<std::size_t> device_column_counts(std::size_t n_cols, TileSpec tile, std::size_t num_devices) {
  std::vector<std::size_t> counts(num_devices);
  for (std::size_t d = 0; d < num_devices; ++d) counts[d] = columns_on_device(n_cols, tile, num_devices, d);
  return counts;
}

std::vector<std::size_t> device_column_offsets(std::size_t n_cols, TileSpec tile, std::size_t num_devices) {
  const auto counts = device_column_counts(n_cols, tile, num_devices);
  std::vector<std::size_t> offsets(num_devices + 1, 0);
  for (std::size_t d = 0; d < num_devices; ++d) offsets[d + 1] = offsets[d] + counts[d];
  return offsets;
}

bool ColumnPermutation::is_bijection() const {
  std::vector<bool> seen(dest_of.size(), false);
  for (std::size_t d : dest_of) {
    if (d >= dest_of.size() || seen[d]) return false;
    seen[d] = true;
  }
  return true;
}

ColumnPermutation ColumnPermutation::inverse() const {
  if (!is_bijection()) throw Error(Errc::non_bijective, "cannot invert a non-bijective mapping");
  ColumnPermutation inv;
  inv.dest_of.resize(dest_of.size());
  for (std::size_t p = 0; p < dest_of.size(); ++p) inv.dest_of[dest_of[p]] = p;
  return inv;
}

ColumnPermutation build_permutation(std::size_t n_cols, TileSpec tile, std::size_t num_devices) {
  const auto offsets = device_column_offsets(n_cols, tile, num_devices);
  ColumnPermutation perm;
  perm.dest_of.resize(n_cols);
  for (std::size_t col = 0; col < n_cols; ++col) {
    const auto p = map_column(col, n_cols, tile, num_devices);
    perm.dest_of[col] = offsets[p.device] + p.local_column;
  }
  return perm;
}

RedistributionPlan decompose_cycles(const ColumnPermutation& perm) {
  if (!perm.is_bijection()) throw Error(Errc::non_bijective, "column mapping is not a permutation");
  RedistributionPlan plan;
  std::vector<bool> visited(perm.size(), false);
  for (std::size_t start = 0; start < perm.size(); ++start) {
    if (visited[start] || perm.dest_of[start] == start) continue;
    std::vector<std::size_t> cycle;
    for (std::size_t p = start; !visited[p]; p = perm.dest_of[p]) {
      visited[p] = true;
      cycle.push_back(p);
    }
    plan.cycles.push_back(std::move(cycle));
  }
  return plan;
}

RedistributionPlan invert_plan(const RedistributionPlan& plan) {
  RedistributionPlan inv;
  inv.cycles.reserve(plan.cycles.size());
  for (const auto& c : plan.cycles) {
    std::vector<std::size_t> r(c.size());
    if (!c.empty()) {
      r[0] = c[0];
      std::reverse_copy(c.begin() + 1, c.end(), r.begin() + 1);
    }
    inv.cycles.push_back(std::move(r));
  }
  return inv;
}

ColumnPermutation plan_permutation(const RedistributionPlan& plan, std::size_t n) {
  ColumnPermutation perm;
  perm.dest_of.resize(n);
  for (std::size_t p = 0; p < n; ++p) perm.dest_of[p] = p;
  for (const auto& c : plan.cycles) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (c[j] >= n) throw Error(Errc::out_of_range, "plan position " + std::to_string(c[j]));
      perm.dest_of[c[j]] = c[(j + 1) % c.size()];
    }
  }
  return perm;
}

std::string format_plan(const RedistributionPlan& plan) {
  std::ostringstream os;
  for (const auto& c : plan.cycles) {
    for (std::size_t j = 0; j < c.size(); ++j) os << (j ? "," : "") << c[j];
    os << '\n';
  }
  return os.str();
}

RedistributionPlan parse_plan(std::string_view text) {
  RedistributionPlan plan;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (line.empty()) continue;
    std::vector<std::size_t> cycle;
    while (true) {
      std::size_t value = 0;
      auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
      if (ec != std::errc{}) throw Error(Errc::format_error, "bad plan line: " + std::string(line));
      cycle.push_back(value);
      line.remove_prefix(static_cast<std::size_t>(ptr - line.data()));
      if (line.empty()) break;
      if (line.front() != ',') throw Error(Errc::format_error, "expected ',' in plan line");
      line.remove_prefix(1);
    }
    plan.cycles.push_back(std::move(cycle));
  }
  return plan;
}

StagingPair allocate_staging_pair(Coordinator& coordinator, std::size_t column_bytes) {
  StagingPair pair;
  for (auto& b : pair.buffers) b = coordinator.allocate_staging(column_bytes);
  return pair;
}

void execute_plan(DistributedMatrix& matrix, const RedistributionPlan& plan, Coordinator& coordinator,
                  StagingPair* staging) {
  validate_shards(matrix);
  const std::size_t n = matrix.descriptor.n_cols;
  const std::size_t col_bytes = matrix.descriptor.column_bytes();
  if (matrix.num_devices() != coordinator.num_devices()) {
    throw Error(Errc::dimension_mismatch, "matrix is sharded over a different number of devices");
  }
  for (const auto& c : plan.cycles) {
    if (c.size() < 2) throw Error(Errc::invalid_argument, "plan cycles must have at least two members");
    for (std::size_t p : c) {
      if (p >= n) throw Error(Errc::dimension_mismatch, "plan position " + std::to_string(p) + " >= " + std::to_string(n));
    }
  }

  StagingPair local;
  if (staging == nullptr) {
    local = allocate_staging_pair(coordinator, col_bytes);
    staging = &local;
  }
  for (const auto& b : staging->buffers) {
    if (b->length < col_bytes) throw Error(Errc::staging_misuse, "staging buffer smaller than one column");
  }

  const auto offsets = device_column_offsets(n, matrix.tile, matrix.num_devices());
  auto slot = [&](std::size_t position) {
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), position);
    const auto device = static_cast<std::size_t>(it - offsets.begin()) - 1;
    return Slot{device, (position - offsets[device]) * col_bytes};
  };
  auto move_column = [&](std::size_t from, std::size_t to) {
    const Slot s = slot(from);
    const Slot d = slot(to);
    coordinator.peer_copy(matrix.shards[s.device], s.byte_offset, matrix.shards[d.device], d.byte_offset, col_bytes);
  };
  auto save = [&](std::size_t position, const BufferHandle& buffer) {
    const Slot s = slot(position);
    coordinator.peer_copy(matrix.shards[s.device], s.byte_offset, buffer, 0, col_bytes);
  };
  auto restore = [&](const BufferHandle& buffer, std::size_t position) {
    const Slot d = slot(position);
    coordinator.peer_copy(buffer, 0, matrix.shards[d.device], d.byte_offset, col_bytes);
  };

  const std::size_t log_start = coordinator.mesh().copy_log().size();
  for (std::size_t ci = 0; ci < plan.cycles.size(); ++ci) {
    const auto& cycle = plan.cycles[ci];
    const BufferHandle& buffer = *staging->buffers[ci % 2];
    if (ci == 0) save(cycle[0], buffer);
    for (std::size_t j = cycle.size() - 1; j >= 1; --j) {
      move_column(cycle[j], cycle[(j + 1) % cycle.size()]);
    }
    if (ci + 1 < plan.cycles.size()) save(plan.cycles[ci + 1][0], *staging->buffers[(ci + 1) % 2]);
    restore(buffer, cycle[1]);
  }

  const auto& log = coordinator.mesh().copy_log();
  const std::span<const CopyRecord> segment(log.data() + log_start, log.size() - log_start);
  if (const auto violations = count_overwrite_violations(segment); violations != 0) {
    throw Error(Errc::staging_misuse, std::to_string(violations) + " columns overwritten before being forwarded");
  }
  matrix.layout = matrix.layout == Layout::contiguous ? Layout::block_cyclic : Layout::contiguous;
}

}  // namespace bcmg
