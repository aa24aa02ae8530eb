#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "bcmg/descriptor.hpp"
#include "bcmg/element_type.hpp"

namespace bcmg {

/// Host-resident column-major matrix.
template <Scalar T>
class DenseMatrix {
 public:
  using value_type = T;

  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j) noexcept { return data_[j * rows_ + i]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[j * rows_ + i]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  std::span<T> column(std::size_t j) noexcept { return {data_.data() + j * rows_, rows_}; }
  std::span<const T> column(std::size_t j) const noexcept { return {data_.data() + j * rows_, rows_}; }

  MatrixDescriptor descriptor(Structure s = Structure::general) const noexcept {
    return {rows_, cols_, element_type_of<T>, s};
  }

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && std::equal(a.data_.begin(), a.data_.end(), b.data_.begin());
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

}  // namespace bcmg
