#pragma once

#include <complex>
#include <cstring>
#include <functional>
#include <vector>

#include "bcmg/dense_matrix.hpp"
#include "bcmg/distributed_matrix.hpp"
#include "bcmg/host_api.hpp"
#include "bcmg/layout.hpp"
#include "bcmg/runtime.hpp"

namespace bcmg::testing {

using c64 = std::complex<float>;
using c128 = std::complex<double>;

template <Scalar T>
DenseMatrix<T> from_rows(std::size_t n_rows, std::size_t n_cols, std::initializer_list<double> row_major) {
  DenseMatrix<T> m(n_rows, n_cols);
  auto it = row_major.begin();
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < n_cols; ++j) m(i, j) = T(static_cast<real_t<T>>(*it++));
  }
  return m;
}

template <Scalar T>
DenseMatrix<T> diag_of(std::initializer_list<double> d) {
  DenseMatrix<T> m(d.size(), d.size());
  std::size_t i = 0;
  for (double v : d) {
    m(i, i) = T(static_cast<real_t<T>>(v));
    ++i;
  }
  return m;
}

/// Columns 0..n-1 filled with distinct values so any permutation shows.
template <Scalar T>
DenseMatrix<T> labelled(std::size_t rows, std::size_t cols) {
  DenseMatrix<T> m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) {
      const auto v = static_cast<real_t<T>>(1000 * j + i);
      if constexpr (ScalarTraits<T>::is_complex) {
        m(i, j) = T(v, -v / 2);
      } else {
        m(i, j) = v;
      }
    }
  }
  return m;
}

/// Publishes `a` contiguously over `devices` simulated devices and runs
/// `body` as the coordinator. Returns the mesh snapshot taken right after
/// the body.
template <Scalar T>
MeshSnapshot with_distributed(const DenseMatrix<T>& a, TileSpec tile, std::size_t devices, CoordinationMode mode,
                              Structure structure,
                              const std::function<void(Coordinator&, DistributedMatrix&)>& body,
                              std::size_t capacity = kUnlimited) {
  DeviceRuntime rt(devices, mode, capacity);
  HandleRegistry reg(rt.mesh(), mode);
  rt.run_workers([&](Worker& w) { publish_columns(w, reg, a, tile, devices); });
  return rt.run_coordinated({&reg}, [&](Coordinator& c) {
    DistributedMatrix m{a.descriptor(structure), tile, Layout::contiguous, c.handles(0)};
    body(c, m);
    return c.mesh().snapshot();
  });
}

}  // namespace bcmg::testing
