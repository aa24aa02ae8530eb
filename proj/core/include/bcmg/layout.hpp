#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "bcmg/descriptor.hpp"
#include "bcmg/distributed_matrix.hpp"
#include "bcmg/runtime.hpp"

namespace bcmg {

struct ColumnPlacement {
  std::size_t device = 0;
  std::size_t local_column = 0;

  friend bool operator==(const ColumnPlacement&, const ColumnPlacement&) = default;
};

/// Block-cyclic placement of a global column: tile t = col / T_A goes to
/// device t mod D at local tile slot t / D. A short final tile is placed by
/// the same rule.
ColumnPlacement map_column(std::size_t global_col, std::size_t n_cols, TileSpec tile, std::size_t num_devices);

/// Inverse of map_column.
std::size_t global_column(ColumnPlacement placement, TileSpec tile, std::size_t num_devices);

/// Number of columns device `device` owns under the block-cyclic layout.
std::size_t columns_on_device(std::size_t n_cols, TileSpec tile, std::size_t num_devices, std::size_t device);

std::vector<std::size_t> device_column_counts(std::size_t n_cols, TileSpec tile, std::size_t num_devices);

/// Prefix sums of device_column_counts; size num_devices + 1. Device d's
/// columns occupy positions [offsets[d], offsets[d + 1]) in the
/// device-concatenated position space.
std::vector<std::size_t> device_column_offsets(std::size_t n_cols, TileSpec tile, std::size_t num_devices);

/// Map from position under the contiguous layout (which is the global
/// column index) to position under the block-cyclic layout.
struct ColumnPermutation {
  std::vector<std::size_t> dest_of;

  std::size_t size() const noexcept { return dest_of.size(); }
  bool is_bijection() const;
  ColumnPermutation inverse() const;

  friend bool operator==(const ColumnPermutation&, const ColumnPermutation&) = default;
};

ColumnPermutation build_permutation(std::size_t n_cols, TileSpec tile, std::size_t num_devices);

/// Disjoint cycles of a permutation. A cycle [p0, p1, ..., pk-1] moves the
/// column at p_j to p_{j+1} and the column at p_{k-1} to p0. Cycles are
/// ordered by their smallest member, which is also their first entry.
struct RedistributionPlan {
  static constexpr std::size_t staging_buffer_count = 2;
  static constexpr std::size_t staging_buffer_columns = 1;

  std::vector<std::vector<std::size_t>> cycles;

  friend bool operator==(const RedistributionPlan&, const RedistributionPlan&) = default;
};

/// Throws Error{non_bijective} when perm is not a permutation.
RedistributionPlan decompose_cycles(const ColumnPermutation& perm);

/// Reverses every cycle (keeping its head), so executing a plan and then
/// its inverse restores the original data.
RedistributionPlan invert_plan(const RedistributionPlan& plan);

/// The permutation realised by rotating along each cycle, over n positions.
ColumnPermutation plan_permutation(const RedistributionPlan& plan, std::size_t n);

/// Diagnostic text form: one cycle per line, comma-separated positions.
std::string format_plan(const RedistributionPlan& plan);
RedistributionPlan parse_plan(std::string_view text);

/// The two one-column staging buffers used by execute_plan.
struct StagingPair {
  std::array<ScopedBuffer, RedistributionPlan::staging_buffer_count> buffers;
};

StagingPair allocate_staging_pair(Coordinator& coordinator, std::size_t column_bytes);

/// Rotates the matrix columns in place along every cycle, using only peer
/// copies and the two staging buffers, and flips the matrix layout
/// (contiguous <-> block_cyclic). A plan from build_permutation goes
/// contiguous -> block_cyclic; its inverse goes back.
///
/// Each cycle saves its head column into a staging buffer, shifts the rest
/// backwards along the cycle, and finally writes the saved column into the
/// head's successor. Cycles alternate buffers so the next head is saved
/// before the current cycle closes. The copy log of the call is audited
/// afterwards and any write that precedes the read of its target raises
/// Error{staging_misuse}.
void execute_plan(DistributedMatrix& matrix, const RedistributionPlan& plan, Coordinator& coordinator,
                  StagingPair* staging = nullptr);

}  // namespace bcmg
