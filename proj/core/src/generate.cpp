#include "bcmg/generate.hpp"

namespace bcmg {

namespace {

template <Scalar T>
T draw(SplitMix64& rng) {
  if constexpr (ScalarTraits<T>::is_complex) {
    using R = real_t<T>;
    const double re = rng.uniform_pm1();
    const double im = rng.uniform_pm1();
    return {static_cast<R>(re), static_cast<R>(im)};
  } else {
    return static_cast<T>(rng.uniform_pm1());
  }
}

}  // namespace

template <Scalar T>
DenseMatrix<T> random_uniform(std::size_t rows, std::size_t cols, SplitMix64& rng) {
  DenseMatrix<T> m(rows, cols);
  for (auto& x : m.data()) x = draw<T>(rng);
  return m;
}

template <Scalar T>
DenseMatrix<T> diag_ramp(std::size_t n) {
  DenseMatrix<T> m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = T(static_cast<real_t<T>>(i + 1));
  return m;
}

template <Scalar T>
DenseMatrix<T> random_spd(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const auto b = random_uniform<T>(n, n, rng);
  DenseMatrix<T> a(n, n);
  // Lower triangle of B * B^H, mirrored, so the result is exactly Hermitian.
  // Rows of B as contiguous columns, so the k loop runs unit-stride.
  DenseMatrix<T> bt(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) bt(k, i) = b(i, k);
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = j; i < n; ++i) {
      T s{};
      for (std::size_t k = 0; k < n; ++k) s += bt(k, i) * conj(bt(k, j));
      a(i, j) = s;
      a(j, i) = conj(s);
    }
    a(j, j) = T(real_part(a(j, j)) + static_cast<real_t<T>>(n));
  }
  return a;
}

template <Scalar T>
DenseMatrix<T> random_hermitian(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const auto b = random_uniform<T>(n, n, rng);
  DenseMatrix<T> a(n, n);
  const real_t<T> half(0.5);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = j; i < n; ++i) {
      const T s = (b(i, j) + conj(b(j, i))) * half;
      a(i, j) = s;
      a(j, i) = conj(s);
    }
    a(j, j) = T(real_part(a(j, j)));
  }
  return a;
}

template <Scalar T>
DenseMatrix<T> ones(std::size_t n, std::size_t nrhs) {
  DenseMatrix<T> m(n, nrhs);
  for (auto& x : m.data()) x = T(1);
  return m;
}

#define BCMG_INSTANTIATE(T)                                                                \
  template DenseMatrix<T> random_uniform<T>(std::size_t, std::size_t, SplitMix64&);        \
  template DenseMatrix<T> diag_ramp<T>(std::size_t);                                       \
  template DenseMatrix<T> random_spd<T>(std::size_t, std::uint64_t);                       \
  template DenseMatrix<T> random_hermitian<T>(std::size_t, std::uint64_t);                 \
  template DenseMatrix<T> ones<T>(std::size_t, std::size_t);

BCMG_INSTANTIATE(float)
BCMG_INSTANTIATE(double)
BCMG_INSTANTIATE(std::complex<float>)
BCMG_INSTANTIATE(std::complex<double>)

#undef BCMG_INSTANTIATE

}  // namespace bcmg
