#include "bcmg/residual.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "bcmg/error.hpp"

namespace bcmg {

namespace {

using Wide = std::complex<double>;

template <Scalar T>
Wide widen(T x) {
  if constexpr (ScalarTraits<T>::is_complex) {
    return {static_cast<double>(x.real()), static_cast<double>(x.imag())};
  } else {
    return {static_cast<double>(x), 0.0};
  }
}

template <Scalar T>
std::vector<Wide> widen(const DenseMatrix<T>& a) {
  std::vector<Wide> out(a.size());
  std::transform(a.data().begin(), a.data().end(), out.begin(), [](T x) { return widen(x); });
  return out;
}

// C = A B for column-major widened operands.
std::vector<Wide> multiply(const std::vector<Wide>& a, std::size_t m, std::size_t k, const std::vector<Wide>& b,
                           std::size_t n) {
  std::vector<Wide> c(m * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t p = 0; p < k; ++p) {
      const Wide bpj = b[j * k + p];
      if (bpj == Wide{}) continue;
      const Wide* ap = a.data() + p * m;
      Wide* cj = c.data() + j * m;
      for (std::size_t i = 0; i < m; ++i) cj[i] += ap[i] * bpj;
    }
  }
  return c;
}

double fro(const std::vector<Wide>& a) {
  double s = 0;
  for (const Wide& x : a) s += std::norm(x);
  return std::sqrt(s);
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(Errc::dimension_mismatch, what);
}

}  // namespace

template <Scalar T>
double frobenius(const DenseMatrix<T>& a) {
  return fro(widen(a));
}

template <Scalar T>
double solve_residual(const DenseMatrix<T>& a, const DenseMatrix<T>& x, const DenseMatrix<T>& b) {
  require(a.rows() == a.cols() && x.rows() == a.cols() && b.rows() == a.rows() && x.cols() == b.cols(),
          "solve residual operands do not conform");
  const auto wa = widen(a);
  const auto wx = widen(x);
  const auto wb = widen(b);
  auto r = multiply(wa, a.rows(), a.cols(), wx, x.cols());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= wb[i];
  return fro(r) / (fro(wa) * fro(wx) + fro(wb));
}

template <Scalar T>
double inverse_residual(const DenseMatrix<T>& a, const DenseMatrix<T>& ainv) {
  const std::size_t n = a.rows();
  require(a.cols() == n && ainv.rows() == n && ainv.cols() == n, "inverse residual operands do not conform");
  auto r = multiply(widen(a), n, n, widen(ainv), n);
  for (std::size_t i = 0; i < n; ++i) r[i * n + i] -= 1.0;
  return fro(r) / std::sqrt(static_cast<double>(n));
}

template <Scalar T>
double eigen_residual(const DenseMatrix<T>& a, std::span<const real_t<T>> values, const DenseMatrix<T>& v) {
  const std::size_t n = a.rows();
  require(a.cols() == n && v.rows() == n && v.cols() == values.size(), "eigen residual operands do not conform");
  const auto wa = widen(a);
  const auto wv = widen(v);
  auto r = multiply(wa, n, n, wv, v.cols());
  for (std::size_t j = 0; j < v.cols(); ++j) {
    for (std::size_t i = 0; i < n; ++i) r[j * n + i] -= wv[j * n + i] * static_cast<double>(values[j]);
  }
  return fro(r) / fro(wa);
}

template <Scalar T>
double orthogonality(const DenseMatrix<T>& v) {
  const auto wv = widen(v);
  const std::size_t n = v.rows();
  const std::size_t k = v.cols();
  double s = 0;
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < k; ++i) {
      Wide g{};
      for (std::size_t r = 0; r < n; ++r) g += std::conj(wv[i * n + r]) * wv[j * n + r];
      if (i == j) g -= 1.0;
      s += std::norm(g);
    }
  }
  return std::sqrt(s);
}

template <Scalar T>
double max_abs(const DenseMatrix<T>& a) {
  double m = 0;
  for (T x : a.data()) m = std::max(m, std::abs(widen(x)));
  return m;
}

template <Scalar T>
double max_abs_diff(const DenseMatrix<T>& a, const DenseMatrix<T>& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "compared matrices differ in shape");
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(widen(a.data()[i]) - widen(b.data()[i])));
  return m;
}

template <Scalar T>
double projector_distance(std::span<const real_t<T>> values, const DenseMatrix<T>& v,
                          std::span<const real_t<T>> ref_values, const DenseMatrix<T>& ref_v, double gap) {
  const std::size_t n = v.rows();
  require(values.size() == ref_values.size() && v.cols() == values.size() && ref_v.rows() == n &&
              ref_v.cols() == v.cols(),
          "eigenpair sets do not conform");
  const auto wv = widen(v);
  const auto wr = widen(ref_v);
  double worst = 0;
  std::size_t begin = 0;
  while (begin < values.size()) {
    std::size_t end = begin + 1;
    while (end < values.size() && static_cast<double>(ref_values[end]) - static_cast<double>(ref_values[end - 1]) < gap) {
      ++end;
    }
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        Wide p{};
        for (std::size_t c = begin; c < end; ++c) {
          p += wv[c * n + i] * std::conj(wv[c * n + j]) - wr[c * n + i] * std::conj(wr[c * n + j]);
        }
        worst = std::max(worst, std::abs(p));
      }
    }
    begin = end;
  }
  return worst;
}

#define BCMG_INSTANTIATE(T)                                                                                        \
  template double frobenius<T>(const DenseMatrix<T>&);                                                             \
  template double solve_residual<T>(const DenseMatrix<T>&, const DenseMatrix<T>&, const DenseMatrix<T>&);          \
  template double inverse_residual<T>(const DenseMatrix<T>&, const DenseMatrix<T>&);                               \
  template double eigen_residual<T>(const DenseMatrix<T>&, std::span<const real_t<T>>, const DenseMatrix<T>&);     \
  template double orthogonality<T>(const DenseMatrix<T>&);                                                         \
  template double max_abs<T>(const DenseMatrix<T>&);                                                               \
  template double max_abs_diff<T>(const DenseMatrix<T>&, const DenseMatrix<T>&);                                   \
  template double projector_distance<T>(std::span<const real_t<T>>, const DenseMatrix<T>&,                         \
                                        std::span<const real_t<T>>, const DenseMatrix<T>&, double);

BCMG_INSTANTIATE(float)
BCMG_INSTANTIATE(double)
BCMG_INSTANTIATE(std::complex<float>)
BCMG_INSTANTIATE(std::complex<double>)

}  // namespace bcmg
