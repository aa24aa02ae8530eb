#pragma once

#include <cstddef>
#include <string_view>

#include "bcmg/element_type.hpp"

namespace bcmg {

/// Matrix structure tags. positive_definite means SPD for real element
/// types and HPD for complex ones.
enum class Structure {
  general,
  symmetric,
  hermitian,
  positive_definite,
};

std::string_view to_string(Structure s) noexcept;

/// Global description of a dense matrix. Storage is always column-major;
/// symmetric matrices are stored full and the solvers read the lower
/// triangle.
struct MatrixDescriptor {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  ElementType element_type = ElementType::real64;
  Structure structure = Structure::general;

  std::size_t column_bytes() const noexcept { return n_rows * element_size(element_type); }
  std::size_t bytes() const noexcept { return n_cols * column_bytes(); }
  bool square() const noexcept { return n_rows == n_cols; }

  friend bool operator==(const MatrixDescriptor&, const MatrixDescriptor&) = default;
};

/// Throws Error{dimension_mismatch} or Error{type_structure_mismatch}.
void validate_descriptor(const MatrixDescriptor& desc);

/// Tile width T_A of the 1D block-cyclic column layout.
struct TileSpec {
  std::size_t width = 1;

  friend bool operator==(const TileSpec&, const TileSpec&) = default;
};

/// Requires 1 <= width <= n_cols.
void validate_tile(TileSpec tile, std::size_t n_cols);

struct RhsDescriptor {
  std::size_t n_rows = 0;
  std::size_t n_rhs = 1;
  ElementType element_type = ElementType::real64;
};

/// Checks the right-hand side against its coefficient matrix.
void validate_rhs(const RhsDescriptor& rhs, const MatrixDescriptor& a);

}  // namespace bcmg
