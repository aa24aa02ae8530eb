#pragma once

// Column kernels shared by the distributed routines. Complex arithmetic is
// spelled out on interleaved (re, im) pairs so the loops vectorise and
// avoid the NaN-recovery path of std::complex multiplication.

#include <cmath>
#include <complex>
#include <cstddef>

#include "bcmg/element_type.hpp"

namespace bcmg::kernels {

// y[i] -= x[i] * m
template <Scalar T>
inline void axpy_minus(T* __restrict y, const T* __restrict x, T m, std::size_t len) {
  if constexpr (ScalarTraits<T>::is_complex) {
    using R = real_t<T>;
    auto* yr = reinterpret_cast<R*>(y);
    const auto* xr = reinterpret_cast<const R*>(x);
    const R mr = m.real();
    const R mi = m.imag();
    for (std::size_t i = 0; i < len; ++i) {
      const R a = xr[2 * i];
      const R b = xr[2 * i + 1];
      yr[2 * i] -= a * mr - b * mi;
      yr[2 * i + 1] -= a * mi + b * mr;
    }
  } else {
    for (std::size_t i = 0; i < len; ++i) y[i] -= x[i] * m;
  }
}

// sum_i conj(x[i]) * y[i], accumulated in index order
template <Scalar T>
inline T dotc(const T* x, const T* y, std::size_t len) {
  if constexpr (ScalarTraits<T>::is_complex) {
    using R = real_t<T>;
    const auto* xr = reinterpret_cast<const R*>(x);
    const auto* yr = reinterpret_cast<const R*>(y);
    R re = 0;
    R im = 0;
    for (std::size_t i = 0; i < len; ++i) {
      const R a = xr[2 * i];
      const R b = xr[2 * i + 1];
      const R c = yr[2 * i];
      const R d = yr[2 * i + 1];
      re += a * c + b * d;
      im += a * d - b * c;
    }
    return {re, im};
  } else {
    T s = 0;
    for (std::size_t i = 0; i < len; ++i) s += x[i] * y[i];
    return s;
  }
}

template <Scalar T>
inline T mul(T a, T b) noexcept {
  if constexpr (ScalarTraits<T>::is_complex) {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
  } else {
    return a * b;
  }
}

template <Scalar T>
inline T scale(T a, real_t<T> s) noexcept {
  if constexpr (ScalarTraits<T>::is_complex) {
    return {a.real() * s, a.imag() * s};
  } else {
    return a * s;
  }
}

template <Scalar T>
inline void divide_real(T* x, real_t<T> r, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) x[i] = div_real(x[i], r);
}

template <Scalar T>
inline bool is_zero(T x) noexcept {
  return x == T{};
}

// Unit-modulus scalar with the phase of x (1 for x == 0).
template <Scalar T>
inline T phase_of(T x) noexcept {
  const real_t<T> m = std::abs(x);
  if (m == 0) return T(1);
  return div_real(x, m);
}

}  // namespace bcmg::kernels
