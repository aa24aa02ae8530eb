#include "bcmg/descriptor.hpp"

#include <string>

namespace bcmg {

std::string_view to_string(Structure s) noexcept {
  switch (s) {
    case Structure::general:
      return "general";
    case Structure::symmetric:
      return "symmetric";
    case Structure::hermitian:
      return "hermitian";
    case Structure::positive_definite:
      return "positive_definite";
  }
  return "?";
}

void validate_descriptor(const MatrixDescriptor& desc) {
  if (desc.n_rows == 0 || desc.n_cols == 0) {
    throw Error(Errc::dimension_mismatch, "matrix dimensions must be positive");
  }
  if (desc.structure != Structure::general && !desc.square()) {
    throw Error(Errc::dimension_mismatch, std::string(to_string(desc.structure)) + " matrix must be square, got " +
                                              std::to_string(desc.n_rows) + "x" + std::to_string(desc.n_cols));
  }
  if (desc.structure == Structure::hermitian && !is_complex(desc.element_type)) {
    throw Error(Errc::type_structure_mismatch, "hermitian structure requires a complex element type");
  }
  if (desc.structure == Structure::symmetric && is_complex(desc.element_type)) {
    throw Error(Errc::type_structure_mismatch, "symmetric structure requires a real element type");
  }
}

void validate_tile(TileSpec tile, std::size_t n_cols) {
  if (tile.width == 0 || tile.width > n_cols) {
    throw Error(Errc::invalid_argument,
                "tile width " + std::to_string(tile.width) + " outside [1, " + std::to_string(n_cols) + "]");
  }
}

void validate_rhs(const RhsDescriptor& rhs, const MatrixDescriptor& a) {
  if (rhs.n_rhs == 0) throw Error(Errc::dimension_mismatch, "right-hand side needs at least one column");
  if (rhs.n_rows != a.n_rows) {
    throw Error(Errc::dimension_mismatch, "right-hand side has " + std::to_string(rhs.n_rows) +
                                              " rows, matrix has " + std::to_string(a.n_rows));
  }
  if (rhs.element_type != a.element_type) {
    throw Error(Errc::type_structure_mismatch, "right-hand side element type differs from the matrix");
  }
}

}  // namespace bcmg
