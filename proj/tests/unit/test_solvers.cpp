#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bcmg/generate.hpp"
#include "bcmg/oracle.hpp"
#include "bcmg/residual.hpp"
#include "bcmg/solvers.hpp"
#include "bcmg/tridiagonal.hpp"
#include "test_support.hpp"

namespace bcmg {
namespace {

using testing::c128;
using testing::c64;
using testing::diag_of;
using testing::from_rows;
using testing::with_distributed;

template <Scalar T>
double nu(std::size_t n, double factor) {
  return factor * double(n) * double(epsilon<T>);
}

RunOptions opts(std::size_t tile, std::size_t devices, CoordinationMode mode = CoordinationMode::shared_address) {
  RunOptions o;
  o.tile = {tile};
  o.devices = devices;
  o.mode = mode;
  return o;
}

template <class F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::invalid_argument;
}

// --- Worked examples --------------------------------------------------------

TEST(PotrfTest, TwoByTwo) {
  const auto a = from_rows<double>(2, 2, {4, 2, 2, 3});
  for (std::size_t d : {1u, 2u}) {
    const auto out = cholesky(a, opts(1, d));
    EXPECT_EQ(out.info, 0u);
    EXPECT_DOUBLE_EQ(out.factor(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(out.factor(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(out.factor(1, 1), std::sqrt(2.0));
    EXPECT_EQ(out.factor(0, 1), 2.0) << "strict upper triangle must be left alone";
  }
}

TEST(PotrfTest, IndefiniteReportsPivot) {
  const auto a = diag_of<double>({1, -1});
  EXPECT_EQ(cholesky(a, opts(1, 2)).info, 2u);
  const auto b = diag_of<c64>({1, 2, 0, 4});
  EXPECT_EQ(cholesky(b, opts(2, 2)).info, 3u);
}

TEST(PotrfTest, MatchesOracleFactor) {
  const auto a = random_spd<c128>(37, 5);
  const auto ref = oracle::ref_cholesky(a);
  const auto out = cholesky(a, opts(4, 3));
  ASSERT_EQ(out.info, 0u);
  double worst = 0;
  for (std::size_t j = 0; j < 37; ++j) {
    for (std::size_t i = j; i < 37; ++i) worst = std::max(worst, std::abs(out.factor(i, j) - ref.factor(i, j)));
  }
  EXPECT_LE(worst, nu<c128>(37, 10) * max_abs(ref.factor));
}

TEST(PotrsTest, TwoByTwo) {
  const auto a = from_rows<double>(2, 2, {4, 2, 2, 3});
  const auto b = from_rows<double>(2, 1, {6, 5});
  const auto x = solve(a, b, opts(1, 2));
  EXPECT_NEAR(x(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(x(1, 0), 1.0, 1e-15);
}

TEST(PotrsTest, DiagonalExact) {
  const auto a = diag_ramp<double>(8);
  const auto b = ones<double>(8, 1);
  const auto x = solve(a, b, opts(2, 4));
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(x(i, 0), 1.0 / double(i + 1), 1e-15);
}

TEST(PotrsTest, MultipleRightHandSides) {
  const auto a = random_spd<c64>(20, 8);
  SplitMix64 g(3);
  const auto b = random_uniform<c64>(20, 3, g);
  const auto x = solve(a, b, opts(3, 3));
  EXPECT_LE(solve_residual(a, x, b), nu<c64>(20, 100));
}

TEST(PotrsTest, EveryReplicaHoldsTheSolution) {
  const auto a = random_spd<double>(12, 1);
  const auto b = ones<double>(12, 1);
  DeviceRuntime rt(3, CoordinationMode::isolated);
  HandleRegistry ra(rt.mesh(), rt.mode());
  HandleRegistry rb(rt.mesh(), rt.mode());
  rt.run_workers([&](Worker& w) {
    publish_columns(w, ra, a, {2}, 3);
    publish_replicated(w, rb, b);
  });
  rt.run_coordinated({&ra, &rb}, [&](Coordinator& c) {
    DistributedMatrix am{a.descriptor(Structure::positive_definite), {2}, Layout::contiguous, c.handles(0)};
    ReplicatedMatrix bm{12, 1, ElementType::real64, c.handles(1)};
    potrs(am, bm, c);
    EXPECT_EQ(am.layout, Layout::block_cyclic);
    const auto x0 = download_replica<double>(c, bm, 0);
    EXPECT_EQ(download_replica<double>(c, bm, 1), x0);
    EXPECT_EQ(download_replica<double>(c, bm, 2), x0);
    EXPECT_LE(solve_residual(a, x0, b), nu<double>(12, 100));
  });
}

TEST(PotrsTest, IndefiniteThrowsWithPivot) {
  const auto a = diag_of<double>({1, -1});
  try {
    solve(a, ones<double>(2, 1), opts(1, 2));
    FAIL();
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot(), 2u);
  }
}

TEST(PotrsTest, RejectsWrongInputs) {
  const auto a = random_spd<double>(4, 1);
  EXPECT_EQ(code_of([&] { solve(a, ones<double>(3, 1), opts(1, 2)); }), Errc::dimension_mismatch);
  EXPECT_EQ(code_of([&] { solve(a, ones<double>(4, 1), opts(5, 2)); }), Errc::invalid_argument);
  with_distributed(a, {1}, 2, CoordinationMode::shared_address, Structure::symmetric,
                   [&](Coordinator& c, DistributedMatrix& m) {
                     ReplicatedMatrix b{4, 1, ElementType::real64, {}};
                     EXPECT_EQ(code_of([&] { potrs(m, b, c); }), Errc::type_structure_mismatch);
                   });
}

TEST(PotriTest, TwoByTwo) {
  const auto a = from_rows<double>(2, 2, {4, 2, 2, 3});
  const auto inv = inverse(a, opts(1, 2));
  EXPECT_NEAR(inv(0, 0), 0.375, 1e-15);
  EXPECT_NEAR(inv(1, 0), -0.25, 1e-15);
  EXPECT_NEAR(inv(0, 1), -0.25, 1e-15);
  EXPECT_NEAR(inv(1, 1), 0.5, 1e-15);
}

TEST(PotriTest, ResultIsExactlyHermitian) {
  const auto a = random_spd<c128>(19, 2);
  const auto inv = inverse(a, opts(4, 3));
  for (std::size_t j = 0; j < 19; ++j) {
    EXPECT_EQ(inv(j, j).imag(), 0.0);
    for (std::size_t i = 0; i < 19; ++i) ASSERT_EQ(inv(i, j), conj(inv(j, i)));
  }
  EXPECT_LE(inverse_residual(a, inv), nu<c128>(19, 100));
}

TEST(PotriTest, IndefiniteThrowsWithPivot) {
  try {
    inverse(diag_of<float>({2, 1, -3}), opts(1, 3));
    FAIL();
  } catch (const NotPositiveDefinite& e) {
    EXPECT_EQ(e.pivot(), 3u);
  }
}

TEST(SyevdTest, DiagonalInput) {
  const auto out = eigh(diag_of<double>({3, 1, 2}), opts(1, 2));
  EXPECT_EQ(out.values, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(out.vectors, from_rows<double>(3, 3, {0, 0, 1, 1, 0, 0, 0, 1, 0}));
}

TEST(SyevdTest, TwoByTwoSignConvention) {
  const auto out = eigh(from_rows<double>(2, 2, {2, 1, 1, 2}), opts(1, 2));
  const double r = std::numbers::sqrt2 / 2;
  EXPECT_NEAR(out.values[0], 1.0, 1e-15);
  EXPECT_NEAR(out.values[1], 3.0, 1e-15);
  // Equal magnitudes: the first of them is made positive.
  EXPECT_NEAR(out.vectors(0, 0), r, 1e-15);
  EXPECT_NEAR(out.vectors(1, 0), -r, 1e-15);
  EXPECT_NEAR(out.vectors(0, 1), r, 1e-15);
  EXPECT_NEAR(out.vectors(1, 1), r, 1e-15);
}

TEST(SyevdTest, Identity) {
  const auto out = eigh(DenseMatrix<c128>::identity(5), opts(2, 2));
  for (double v : out.values) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(out.vectors, DenseMatrix<c128>::identity(5));
}

TEST(SyevdTest, OneByOne) {
  const auto out = eigh(diag_of<float>({-2.5}), opts(1, 1));
  EXPECT_EQ(out.values, (std::vector<float>{-2.5f}));
  EXPECT_EQ(out.vectors(0, 0), 1.0f);
}

TEST(SyevdTest, ComplexSignConvention) {
  const auto a = random_hermitian<c64>(24, 17);
  const auto out = eigh(a, opts(5, 3));
  for (std::size_t j = 0; j < 24; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 24; ++i) {
      if (std::norm(out.vectors(i, j)) > std::norm(out.vectors(best, j))) best = i;
    }
    EXPECT_EQ(out.vectors(best, j).imag(), 0.0f);
    EXPECT_GT(out.vectors(best, j).real(), 0.0f);
  }
}

TEST(SyevdTest, ReadsOnlyTheLowerTriangle) {
  auto a = random_hermitian<c128>(10, 4);
  const auto clean = eigh(a, opts(3, 2));
  for (std::size_t j = 1; j < 10; ++j) {
    for (std::size_t i = 0; i < j; ++i) a(i, j) = c128(99, -7);
  }
  const auto dirty = eigh(a, opts(3, 2));
  EXPECT_EQ(clean.values, dirty.values);
  EXPECT_EQ(clean.vectors, dirty.vectors);
}

TEST(SyevdTest, RejectsGeneralStructure) {
  const auto a = random_hermitian<double>(4, 1);
  with_distributed(a, {1}, 2, CoordinationMode::shared_address, Structure::general,
                   [&](Coordinator& c, DistributedMatrix& m) {
                     EXPECT_EQ(code_of([&] { syevd(m, c); }), Errc::type_structure_mismatch);
                   });
}

// --- Redistribution drivers --------------------------------------------------

TEST(RedistributeTest, FourColumnsTwoDevices) {
  const auto a = testing::labelled<double>(2, 4);
  with_distributed(a, {1}, 2, CoordinationMode::shared_address, Structure::general,
                   [&](Coordinator& c, DistributedMatrix& m) {
                     redistribute_in(m, c);
                     EXPECT_EQ(m.layout, Layout::block_cyclic);
                     const auto d0 = c.view<double>(m.shards[0]);
                     const auto d1 = c.view<double>(m.shards[1]);
                     EXPECT_EQ(d0[0], a(0, 0));
                     EXPECT_EQ(d0[2], a(0, 2));
                     EXPECT_EQ(d1[0], a(0, 1));
                     EXPECT_EQ(d1[2], a(0, 3));
                     EXPECT_EQ(download_columns<double>(c, m), a);
                     EXPECT_EQ(code_of([&] { redistribute_in(m, c); }), Errc::invalid_argument);
                     redistribute_out(m, c);
                     EXPECT_EQ(m.layout, Layout::contiguous);
                     EXPECT_EQ(download_columns<double>(c, m), a);
                   });
}

TEST(RedistributeTest, SingleDeviceOrSingleTileMovesNothing) {
  const auto a = testing::labelled<c64>(3, 9);
  for (auto [tile, devices] : {std::pair{std::size_t(2), std::size_t(1)}, std::pair{std::size_t(9), std::size_t(3)}}) {
    with_distributed(a, {tile}, devices, CoordinationMode::isolated, Structure::general,
                     [&](Coordinator& c, DistributedMatrix& m) {
                       redistribute_in(m, c);
                       EXPECT_TRUE(c.mesh().copy_log().empty());
                       EXPECT_EQ(download_columns<c64>(c, m), a);
                     });
  }
}

// --- Properties over random shapes ------------------------------------------

struct Shape {
  std::size_t n;
  std::size_t tile;
  std::size_t devices;
  std::uint64_t seed;
  CoordinationMode mode;
};

std::vector<Shape> random_shapes(std::uint64_t seed, int count, std::size_t max_n) {
  SplitMix64 g(seed);
  std::vector<Shape> out;
  for (int i = 0; i < count; ++i) {
    Shape s;
    s.n = 1 + g.next() % max_n;
    s.tile = 1 + g.next() % s.n;
    s.devices = 1 + g.next() % 4;
    s.seed = g.next();
    s.mode = g.next() % 2 ? CoordinationMode::isolated : CoordinationMode::shared_address;
    out.push_back(s);
  }
  return out;
}

template <class T>
class SolverPropertyTest : public ::testing::Test {};
using AllScalars = ::testing::Types<float, double, c64, c128>;
TYPED_TEST_SUITE(SolverPropertyTest, AllScalars);

TYPED_TEST(SolverPropertyTest, SolveAgreesWithOracle) {
  using T = TypeParam;
  for (const auto& s : random_shapes(11, 25, 40)) {
    const auto a = random_spd<T>(s.n, s.seed);
    SplitMix64 g(s.seed + 1);
    const auto b = random_uniform<T>(s.n, 2, g);
    const auto x = solve(a, b, opts(s.tile, s.devices, s.mode));
    const auto ref = oracle::ref_solve(a, b);
    ASSERT_LE(solve_residual(a, x, b), nu<T>(s.n, 100)) << s.n << ' ' << s.tile << ' ' << s.devices;
    ASSERT_LE(max_abs_diff(x, ref), nu<T>(s.n, 10) * std::max(max_abs(ref), 1.0));
  }
}

TYPED_TEST(SolverPropertyTest, InverseAgreesWithOracle) {
  using T = TypeParam;
  for (const auto& s : random_shapes(12, 20, 40)) {
    const auto a = random_spd<T>(s.n, s.seed);
    const auto inv = inverse(a, opts(s.tile, s.devices, s.mode));
    const auto ref = oracle::ref_inverse(a);
    ASSERT_LE(inverse_residual(a, inv), nu<T>(s.n, 100)) << s.n << ' ' << s.tile << ' ' << s.devices;
    ASSERT_LE(max_abs_diff(inv, ref), nu<T>(s.n, 10) * std::max(max_abs(ref), 1.0));
  }
}

TYPED_TEST(SolverPropertyTest, EigenDecompositionIsAccurate) {
  using T = TypeParam;
  for (const auto& s : random_shapes(13, 15, 32)) {
    const auto a = random_hermitian<T>(s.n, s.seed);
    const auto out = eigh(a, opts(s.tile, s.devices, s.mode));
    ASSERT_TRUE(std::is_sorted(out.values.begin(), out.values.end()));
    ASSERT_LE(eigen_residual<T>(a, out.values, out.vectors), nu<T>(s.n, 100)) << s.n << ' ' << s.tile;
    ASSERT_LE(orthogonality(out.vectors), nu<T>(s.n, 100));
    const auto ref = oracle::ref_eigh(a);
    double scale = 1;
    for (auto v : ref.values) scale = std::max(scale, double(std::abs(v)));
    for (std::size_t i = 0; i < s.n; ++i) {
      ASSERT_LE(std::abs(double(out.values[i]) - double(ref.values[i])), nu<T>(s.n, 10) * scale);
    }
  }
}

TYPED_TEST(SolverPropertyTest, ResultsIndependentOfTilingAndDevices) {
  using T = TypeParam;
  const std::size_t n = 23;
  const auto spd = random_spd<T>(n, 77);
  const auto herm = random_hermitian<T>(n, 78);
  const auto b = ones<T>(n, 1);
  const auto x0 = solve(spd, b, opts(1, 1));
  const auto i0 = inverse(spd, opts(1, 1));
  const auto e0 = eigh(herm, opts(1, 1));
  for (std::size_t tile : {std::size_t(1), std::size_t(4), std::size_t(7), n}) {
    for (std::size_t d = 1; d <= 4; ++d) {
      ASSERT_EQ(solve(spd, b, opts(tile, d)), x0) << tile << ' ' << d;
      ASSERT_EQ(inverse(spd, opts(tile, d)), i0) << tile << ' ' << d;
      const auto e = eigh(herm, opts(tile, d));
      ASSERT_EQ(e.values, e0.values);
      ASSERT_EQ(e.vectors, e0.vectors);
    }
  }
}

// --- Workspace ---------------------------------------------------------------

TEST(WorkspaceTest, OutOfMemoryBeforeAnyDataMoves) {
  const auto a = random_spd<double>(16, 3);
  const std::size_t shard_bytes = 8 * 16 * sizeof(double);
  auto check = [&](auto&& routine) {
    DeviceRuntime rt(2, CoordinationMode::shared_address, shard_bytes + 16 * sizeof(double) + 64);
    HandleRegistry ra(rt.mesh(), rt.mode());
    HandleRegistry rb(rt.mesh(), rt.mode());
    rt.run_workers([&](Worker& w) {
      publish_columns(w, ra, a, {4}, 2);
      publish_replicated(w, rb, ones<double>(16, 1));
    });
    rt.run_coordinated({&ra, &rb}, [&](Coordinator& c) {
      DistributedMatrix m{a.descriptor(Structure::positive_definite), {4}, Layout::contiguous, c.handles(0)};
      ReplicatedMatrix b{16, 1, ElementType::real64, c.handles(1)};
      const MeshSnapshot before = c.mesh().snapshot();
      EXPECT_EQ(code_of([&] { routine(m, b, c); }), Errc::out_of_memory);
      EXPECT_TRUE(c.mesh().copy_log().empty());
      EXPECT_EQ(c.mesh().snapshot(), before);
      EXPECT_EQ(m.layout, Layout::contiguous);
      EXPECT_EQ(download_columns<double>(c, m), a);
    });
  };
  check([](DistributedMatrix& m, ReplicatedMatrix& b, Coordinator& c) { potrs(m, b, c); });
  check([](DistributedMatrix& m, ReplicatedMatrix&, Coordinator& c) { potri(m, c); });
  check([](DistributedMatrix& m, ReplicatedMatrix&, Coordinator& c) { syevd(m, c); });
}

TEST(WorkspaceTest, ReportedRequirementIsSufficient) {
  const auto a = random_spd<c64>(20, 3);
  const std::size_t devices = 3;
  const TileSpec tile{3};
  const auto desc = a.descriptor(Structure::positive_definite);
  for (int which = 0; which < 3; ++which) {
    const auto req = which == 0   ? potrs_workspace(desc, tile, devices, 1)
                     : which == 1 ? potri_workspace(desc, tile, devices)
                                  : syevd_workspace(desc, tile, devices);
    std::size_t cap = req.scratch_bytes;
    for (std::size_t d = 0; d < devices; ++d) {
      cap = std::max(cap, req.device_bytes[d] + columns_on_device(20, tile, devices, d) * desc.column_bytes() +
                              20 * sizeof(c64));
    }
    RunOptions o = opts(3, devices);
    o.arena_capacity = cap;
    if (which == 0) {
      EXPECT_NO_THROW(solve(a, ones<c64>(20, 1), o));
    } else if (which == 1) {
      EXPECT_NO_THROW(inverse(a, o));
    } else {
      EXPECT_NO_THROW(eigh(a, o));
    }
  }
}

// --- Tridiagonal QR ------------------------------------------------------------

TEST(TridiagonalTest, SecondDifferenceMatrix) {
  const std::size_t n = 12;
  std::vector<double> d(n, 2.0);
  std::vector<double> e(n - 1, -1.0);
  std::vector<double> z(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) z[i * n + i] = 1;
  tridiagonal_eigen<double>(d, e, z);
  for (std::size_t k = 0; k < n; ++k) {
    const double expected = 2 - 2 * std::cos(double(k + 1) * std::numbers::pi / double(n + 1));
    EXPECT_NEAR(d[k], expected, 1e-14);
  }
}

TEST(TridiagonalTest, VectorsDiagonaliseTheInput) {
  const std::size_t n = 9;
  std::vector<float> d0{4, -1, 3, 0.5f, 2, 2, 7, -3, 1};
  std::vector<float> e0{1, 0, 2, -0.5f, 1e-3f, 3, 1, 1};
  auto d = d0;
  auto e = e0;
  std::vector<float> z(n * n, 0.0f);
  for (std::size_t i = 0; i < n; ++i) z[i * n + i] = 1;
  tridiagonal_eigen<float>(d, e, z);
  ASSERT_TRUE(std::is_sorted(d.begin(), d.end()));
  double worst = 0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      double tv = double(d0[i]) * z[j * n + i];
      if (i > 0) tv += double(e0[i - 1]) * z[j * n + i - 1];
      if (i + 1 < n) tv += double(e0[i]) * z[j * n + i + 1];
      worst = std::max(worst, std::abs(tv - double(d[j]) * z[j * n + i]));
    }
  }
  EXPECT_LE(worst, 100 * n * double(epsilon<float>) * 8);
}

TEST(TridiagonalTest, SweepCapRaisesNoConvergence) {
  const std::size_t n = 10;
  std::vector<double> d(n, 2.0);
  std::vector<double> e(n - 1, -1.0);
  std::vector<double> z(n * n, 0.0);
  EXPECT_EQ(code_of([&] { tridiagonal_eigen<double>(d, e, z, 1); }), Errc::no_convergence);
}

TEST(TridiagonalTest, ShapeChecks) {
  std::vector<double> d(3);
  std::vector<double> e(1);
  std::vector<double> z(9);
  EXPECT_EQ(code_of([&] { tridiagonal_eigen<double>(d, e, z); }), Errc::dimension_mismatch);
}

}  // namespace
}  // namespace bcmg
