#include <gtest/gtest.h>

#include <array>
#include <filesystem>

#include "bcmg/descriptor.hpp"
#include "bcmg/generate.hpp"
#include "bcmg/matrix_io.hpp"
#include "bcmg/oracle.hpp"
#include "test_support.hpp"

namespace bcmg {
namespace {

using testing::c128;
using testing::c64;

TEST(ElementTypeTest, WidthsAreExact) {
  EXPECT_EQ(element_size(ElementType::real32), 4u);
  EXPECT_EQ(element_size(ElementType::real64), 8u);
  EXPECT_EQ(element_size(ElementType::complex64), 8u);
  EXPECT_EQ(element_size(ElementType::complex128), 16u);
  EXPECT_EQ(sizeof(c64), 2 * sizeof(float));
  EXPECT_EQ(sizeof(c128), 2 * sizeof(double));
}

TEST(ElementTypeTest, NamesRoundTrip) {
  for (ElementType t : {ElementType::real32, ElementType::real64, ElementType::complex64, ElementType::complex128}) {
    EXPECT_EQ(parse_element_type(to_string(t)), t);
  }
  EXPECT_EQ(to_string(ElementType::complex128), "c128");
  EXPECT_FALSE(parse_element_type("f16").has_value());
  EXPECT_TRUE(is_complex(ElementType::complex64));
  EXPECT_FALSE(is_complex(ElementType::real64));
}

TEST(ElementTypeTest, ConjugationIsIdentityOnReals) {
  EXPECT_EQ(conj(2.5), 2.5);
  EXPECT_EQ(conj(c128(1, 2)), c128(1, -2));
}

TEST(DescriptorTest, WellFormedSpd) {
  EXPECT_NO_THROW(validate_descriptor({4, 4, ElementType::real64, Structure::positive_definite}));
}

TEST(DescriptorTest, NonSquareSymmetricIsDimensionMismatch) {
  try {
    validate_descriptor({4, 3, ElementType::real64, Structure::symmetric});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension_mismatch);
  }
}

TEST(DescriptorTest, HermitianRealIsTypeStructureMismatch) {
  try {
    validate_descriptor({4, 4, ElementType::real32, Structure::hermitian});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::type_structure_mismatch);
  }
}

TEST(DescriptorTest, SymmetricComplexIsTypeStructureMismatch) {
  try {
    validate_descriptor({4, 4, ElementType::complex64, Structure::symmetric});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::type_structure_mismatch);
  }
}

TEST(DescriptorTest, GeneralMayBeRectangular) {
  EXPECT_NO_THROW(validate_descriptor({4, 3, ElementType::complex128, Structure::general}));
  EXPECT_THROW(validate_descriptor({0, 3, ElementType::real32, Structure::general}), Error);
}

TEST(DescriptorTest, ByteSizes) {
  const MatrixDescriptor d{5, 3, ElementType::complex64, Structure::general};
  EXPECT_EQ(d.column_bytes(), 40u);
  EXPECT_EQ(d.bytes(), 120u);
}

TEST(DescriptorTest, TileBounds) {
  EXPECT_NO_THROW(validate_tile({1}, 8));
  EXPECT_NO_THROW(validate_tile({8}, 8));
  EXPECT_THROW(validate_tile({0}, 8), Error);
  EXPECT_THROW(validate_tile({9}, 8), Error);
}

TEST(DescriptorTest, RhsMustMatch) {
  const MatrixDescriptor a{4, 4, ElementType::real64, Structure::positive_definite};
  EXPECT_NO_THROW(validate_rhs({4, 2, ElementType::real64}, a));
  EXPECT_THROW(validate_rhs({3, 1, ElementType::real64}, a), Error);
  EXPECT_THROW(validate_rhs({4, 0, ElementType::real64}, a), Error);
  EXPECT_THROW(validate_rhs({4, 1, ElementType::real32}, a), Error);
}

TEST(SplitMix64Test, ReferenceSequence) {
  // Published output of the reference C implementation for seed 1234567.
  SplitMix64 g(1234567);
  EXPECT_EQ(g.next(), 6457827717110365317ULL);
  EXPECT_EQ(g.next(), 3203168211198807973ULL);
  EXPECT_EQ(g.next(), 9817491932198370423ULL);
  EXPECT_EQ(g.next(), 4593380528125082431ULL);
  EXPECT_EQ(g.next(), 16408922859458223821ULL);
}

TEST(SplitMix64Test, UniformRange) {
  SplitMix64 g(9);
  for (int i = 0; i < 10000; ++i) {
    const double u = g.uniform_pm1();
    ASSERT_GE(u, -1.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(GenerateTest, DiagRamp) {
  const auto m = diag_ramp<double>(4);
  EXPECT_EQ(m, testing::diag_of<double>({1, 2, 3, 4}));
}

TEST(GenerateTest, RandomSpdIsDeterministic) {
  EXPECT_EQ(random_spd<double>(16, 1), random_spd<double>(16, 1));
  EXPECT_EQ(random_spd<c64>(16, 1), random_spd<c64>(16, 1));
  EXPECT_FALSE(random_spd<double>(16, 1) == random_spd<double>(16, 2));
}

TEST(GenerateTest, RandomSpdIsPositiveDefinite) {
  EXPECT_EQ(oracle::ref_cholesky(random_spd<double>(16, 1)).info, 0u);
  EXPECT_EQ(oracle::ref_cholesky(random_spd<c128>(16, 1)).info, 0u);
  EXPECT_EQ(oracle::ref_cholesky(random_spd<float>(32, 3)).info, 0u);
}

template <Scalar T>
void expect_exactly_hermitian(const DenseMatrix<T>& a) {
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t i = 0; i < a.rows(); ++i) ASSERT_EQ(a(i, j), conj(a(j, i)));
  }
}

TEST(GenerateTest, GeneratorsAreExactlyHermitian) {
  expect_exactly_hermitian(random_spd<c128>(9, 4));
  expect_exactly_hermitian(random_hermitian<c64>(9, 4));
  expect_exactly_hermitian(random_hermitian<double>(9, 4));
}

template <class T>
class MatrixIoTest : public ::testing::Test {};
using AllScalars = ::testing::Types<float, double, c64, c128>;
TYPED_TEST_SUITE(MatrixIoTest, AllScalars);

TYPED_TEST(MatrixIoTest, EncodeDecodeIsBitExact) {
  const auto m = random_hermitian<TypeParam>(7, 11);
  const auto bytes = encode_matrix(m);
  EXPECT_EQ(bytes.size(), kMatrixHeaderBytes + 49 * sizeof(TypeParam));
  const AnyMatrix back = decode_matrix(bytes);
  EXPECT_EQ(std::get<DenseMatrix<TypeParam>>(back), m);
}

TYPED_TEST(MatrixIoTest, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "bcmg_io_roundtrip.bcmg";
  const auto m = testing::labelled<TypeParam>(3, 5);
  write_matrix_file(path, m);
  EXPECT_EQ(std::get<DenseMatrix<TypeParam>>(read_matrix_file(path)), m);
  std::filesystem::remove(path);
}

TEST(MatrixIoFormatTest, HeaderLayout) {
  DenseMatrix<c64> m(3, 2);
  m(0, 0) = c64(1.0f, -2.0f);
  const auto b = encode_matrix(m);
  const std::array<unsigned, 16> expected{'B', 'C', 'M', 'G', 2, 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0};
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(std::to_integer<unsigned>(b[i]), expected[i]) << i;
  float re = 0;
  float im = 0;
  std::memcpy(&re, b.data() + 16, 4);
  std::memcpy(&im, b.data() + 20, 4);
  EXPECT_EQ(re, 1.0f);
  EXPECT_EQ(im, -2.0f);
}

TEST(MatrixIoFormatTest, MalformedInputs) {
  auto good = encode_matrix(DenseMatrix<double>(2, 2));
  auto expect_format_error = [](std::vector<std::byte> bytes) {
    try {
      decode_matrix(bytes);
      FAIL() << "accepted malformed input";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::format_error);
    }
  };
  expect_format_error({good.begin(), good.begin() + 10});
  auto bad_magic = good;
  bad_magic[0] = std::byte{'X'};
  expect_format_error(bad_magic);
  auto bad_code = good;
  bad_code[4] = std::byte{7};
  expect_format_error(bad_code);
  auto bad_reserved = good;
  bad_reserved[6] = std::byte{1};
  expect_format_error(bad_reserved);
  auto short_payload = good;
  short_payload.pop_back();
  expect_format_error(short_payload);
}

}  // namespace
}  // namespace bcmg
