#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "bcmg/dense_matrix.hpp"

namespace bcmg {

// BCMG binary matrix file:
//   bytes 0..3   magic "BCMG"
//   byte  4      element type code (0=f32, 1=f64, 2=c64, 3=c128)
//   bytes 5..7   reserved, zero
//   bytes 8..11  n_rows, u32 little-endian
//   bytes 12..15 n_cols, u32 little-endian
// followed by column-major element data, complex values as (re, im) pairs.
inline constexpr std::size_t kMatrixHeaderBytes = 16;

using AnyMatrix = std::variant<DenseMatrix<float>, DenseMatrix<double>, DenseMatrix<std::complex<float>>,
                               DenseMatrix<std::complex<double>>>;

ElementType element_type_of_matrix(const AnyMatrix& m) noexcept;

std::vector<std::byte> encode_matrix(const AnyMatrix& m);
AnyMatrix decode_matrix(std::span<const std::byte> bytes);

void write_matrix_file(const std::filesystem::path& path, const AnyMatrix& m);
AnyMatrix read_matrix_file(const std::filesystem::path& path);

}  // namespace bcmg
