#include "bcmg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "bcmg/error.hpp"

namespace bcmg::oracle {

namespace {

template <Scalar T>
void require_square(const DenseMatrix<T>& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw Error(Errc::dimension_mismatch, "oracle needs a square matrix");
}

template <Scalar T>
T cj(T x) {
  if constexpr (ScalarTraits<T>::is_complex) {
    return std::conj(x);
  } else {
    return x;
  }
}

}  // namespace

template <Scalar T>
CholeskyResult<T> ref_cholesky(const DenseMatrix<T>& a) {
  require_square(a);
  const std::size_t n = a.rows();
  CholeskyResult<T> out{DenseMatrix<T>(n, n), 0};
  auto& l = out.factor;
  for (std::size_t j = 0; j < n; ++j) {
    real_t<T> s = std::real(a(j, j));
    for (std::size_t k = 0; k < j; ++k) s -= std::norm(l(j, k));
    if (!(s > 0)) {
      out.info = j + 1;
      return out;
    }
    const real_t<T> ljj = std::sqrt(s);
    l(j, j) = T(ljj);
    for (std::size_t i = j + 1; i < n; ++i) {
      T v = a(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * cj(l(j, k));
      l(i, j) = v / ljj;
    }
  }
  return out;
}

template <Scalar T>
DenseMatrix<T> ref_solve(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  require_square(a);
  if (b.rows() != a.rows()) throw Error(Errc::dimension_mismatch, "right-hand side rows differ from A");
  const auto chol = ref_cholesky(a);
  if (chol.info != 0) throw NotPositiveDefinite(chol.info);
  const auto& l = chol.factor;
  const std::size_t n = a.rows();
  DenseMatrix<T> x = b;
  for (std::size_t r = 0; r < x.cols(); ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      T v = x(i, r);
      for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * x(k, r);
      x(i, r) = v / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      T v = x(i, r);
      for (std::size_t k = i + 1; k < n; ++k) v -= cj(l(k, i)) * x(k, r);
      x(i, r) = v / l(i, i);
    }
  }
  return x;
}

template <Scalar T>
DenseMatrix<T> ref_inverse(const DenseMatrix<T>& a) {
  return ref_solve(a, DenseMatrix<T>::identity(a.rows()));
}

template <Scalar T>
EighResult<T> ref_eigh(const DenseMatrix<T>& input) {
  require_square(input);
  using R = real_t<T>;
  const std::size_t n = input.rows();
  DenseMatrix<T> a = input;
  DenseMatrix<T> v = DenseMatrix<T>::identity(n);

  R fro = 0;
  for (const T& x : a.data()) fro += std::norm(x);
  fro = std::sqrt(fro);
  const R target = static_cast<R>(n) * std::numeric_limits<R>::epsilon() * fro;

  auto off_norm = [&] {
    R s = 0;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        if (i != j) s += std::norm(a(i, j));
      }
    }
    return std::sqrt(s);
  };

  std::size_t sweep = 0;
  while (off_norm() > target) {
    if (++sweep > 100) throw Error(Errc::no_convergence, "Jacobi exceeded 100 sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const R mag = std::abs(a(p, q));
        if (mag == 0) continue;
        if constexpr (ScalarTraits<T>::is_complex) {
          // Rotate the phase out of a(p, q): column q by conj(ph), row q by ph.
          const T ph = a(p, q) / mag;
          const T phc = std::conj(ph);
          for (std::size_t i = 0; i < n; ++i) a(i, q) *= phc;
          for (std::size_t j = 0; j < n; ++j) a(q, j) *= ph;
          for (std::size_t i = 0; i < n; ++i) v(i, q) *= phc;
          a(p, q) = T(mag);
          a(q, p) = T(mag);
          a(q, q) = T(std::real(a(q, q)));
        }
        const R apq = std::real(a(p, q));
        const R app = std::real(a(p, p));
        const R aqq = std::real(a(q, q));
        const R theta = (aqq - app) / (2 * apq);
        const R t = (theta >= 0 ? R(1) : R(-1)) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const R c = 1 / std::sqrt(t * t + 1);
        const R s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const T aip = a(i, p);
          const T aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const T apj = a(p, j);
          const T aqj = a(q, j);
          a(p, j) = c * apj - s * aqj;
          a(q, j) = s * apj + c * aqj;
        }
        a(p, q) = T(0);
        a(q, p) = T(0);
        for (std::size_t i = 0; i < n; ++i) {
          const T vip = v(i, p);
          const T viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return std::real(a(i, i)) < std::real(a(j, j)); });
  EighResult<T> out{std::vector<R>(n), DenseMatrix<T>(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = std::real(a(order[j], order[j]));
    auto src = v.column(order[j]);
    auto dst = out.vectors.column(j);
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(src[i]) > std::abs(src[best])) best = i;
    }
    const R m = std::abs(src[best]);
    const T fix = m == 0 ? T(1) : cj(src[best]) / m;
    for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] * fix;
    dst[best] = T(std::real(dst[best]));
  }
  return out;
}

std::vector<std::size_t> cyclic_order(std::size_t n_cols, TileSpec tile, std::size_t num_devices) {
  if (tile.width == 0 || num_devices == 0) throw Error(Errc::invalid_argument, "tile and device count must be positive");
  std::vector<std::size_t> order;
  order.reserve(n_cols);
  for (std::size_t d = 0; d < num_devices; ++d) {
    for (std::size_t start = d * tile.width; start < n_cols; start += num_devices * tile.width) {
      for (std::size_t c = start; c < std::min(start + tile.width, n_cols); ++c) order.push_back(c);
    }
  }
  return order;
}

template <Scalar T>
DenseMatrix<T> ref_redistribute(const DenseMatrix<T>& columns, TileSpec tile, std::size_t num_devices, bool inverse) {
  const auto order = cyclic_order(columns.cols(), tile, num_devices);
  DenseMatrix<T> out(columns.rows(), columns.cols());
  for (std::size_t p = 0; p < order.size(); ++p) {
    const auto src = columns.column(inverse ? p : order[p]);
    auto dst = out.column(inverse ? order[p] : p);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

#define BCMG_INSTANTIATE(T)                                                                          \
  template CholeskyResult<T> ref_cholesky<T>(const DenseMatrix<T>&);                                 \
  template DenseMatrix<T> ref_solve<T>(const DenseMatrix<T>&, const DenseMatrix<T>&);                \
  template DenseMatrix<T> ref_inverse<T>(const DenseMatrix<T>&);                                     \
  template EighResult<T> ref_eigh<T>(const DenseMatrix<T>&);                                         \
  template DenseMatrix<T> ref_redistribute<T>(const DenseMatrix<T>&, TileSpec, std::size_t, bool);

BCMG_INSTANTIATE(float)
BCMG_INSTANTIATE(double)
BCMG_INSTANTIATE(std::complex<float>)
BCMG_INSTANTIATE(std::complex<double>)

}  // namespace bcmg::oracle
