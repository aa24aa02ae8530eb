#include "bcmg/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "bcmg/error.hpp"

namespace bcmg {

template <class Real>
void tridiagonal_eigen(std::span<Real> d, std::span<Real> e, std::span<Real> z, std::size_t max_sweeps) {
  const std::size_t n = d.size();
  if (n > 1 && e.size() != n - 1) throw Error(Errc::dimension_mismatch, "off-diagonal must have n - 1 entries");
  if (z.size() != n * n) throw Error(Errc::dimension_mismatch, "vector matrix must be n x n");
  if (n <= 1) return;
  if (max_sweeps == static_cast<std::size_t>(-1)) max_sweeps = 30 * n;

  constexpr Real eps = std::numeric_limits<Real>::epsilon();
  constexpr Real tiny = std::numeric_limits<Real>::min();
  std::size_t sweeps = 0;

  while (true) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const Real a = std::abs(e[i]);
      if (a <= eps * (std::abs(d[i]) + std::abs(d[i + 1])) || a <= tiny) e[i] = 0;
    }
    std::size_t m = n - 1;
    while (m > 0 && e[m - 1] == 0) --m;
    if (m == 0) break;
    std::size_t l = m - 1;
    while (l > 0 && e[l - 1] != 0) --l;

    if (++sweeps > max_sweeps) {
      throw Error(Errc::no_convergence, "tridiagonal QR exceeded " + std::to_string(max_sweeps) + " sweeps");
    }

    const Real dd = (d[m - 1] - d[m]) / 2;
    const Real em = e[m - 1];
    const Real mu = d[m] - em * em / (dd + std::copysign(std::hypot(dd, em), dd));
    Real x = d[l] - mu;
    Real bulge = e[l];

    for (std::size_t k = l; k < m; ++k) {
      const Real r = std::hypot(x, bulge);
      const Real c = r == 0 ? Real(1) : x / r;
      const Real s = r == 0 ? Real(0) : -bulge / r;
      if (k > l) e[k - 1] = r;

      const Real a = d[k];
      const Real b = d[k + 1];
      const Real f = e[k];
      d[k] = c * c * a - 2 * c * s * f + s * s * b;
      d[k + 1] = s * s * a + 2 * c * s * f + c * c * b;
      e[k] = c * s * (a - b) + (c * c - s * s) * f;
      if (k + 1 < m) {
        bulge = -s * e[k + 1];
        e[k + 1] = c * e[k + 1];
        x = e[k];
      }

      Real* zk = z.data() + k * n;
      Real* zk1 = zk + n;
      for (std::size_t i = 0; i < n; ++i) {
        const Real p = zk[i];
        const Real q = zk1[i];
        zk[i] = c * p - s * q;
        zk1[i] = s * p + c * q;
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return d[i] < d[j]; });
  std::vector<Real> dv(n);
  std::vector<Real> zv(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    dv[j] = d[order[j]];
    std::copy_n(z.data() + order[j] * n, n, zv.data() + j * n);
  }
  std::copy(dv.begin(), dv.end(), d.begin());
  std::copy(zv.begin(), zv.end(), z.begin());
}

template void tridiagonal_eigen<float>(std::span<float>, std::span<float>, std::span<float>, std::size_t);
template void tridiagonal_eigen<double>(std::span<double>, std::span<double>, std::span<double>, std::size_t);

}  // namespace bcmg
