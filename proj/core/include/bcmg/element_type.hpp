#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <type_traits>

#include "bcmg/error.hpp"

namespace bcmg {

/// The four supported scalar types. Complex values are stored as
/// interleaved (re, im) pairs of the matching real width, which is exactly
/// the layout of std::complex<float> / std::complex<double>.
enum class ElementType : std::uint8_t {
  real32 = 0,
  real64 = 1,
  complex64 = 2,
  complex128 = 3,
};

std::size_t element_size(ElementType type) noexcept;
bool is_complex(ElementType type) noexcept;

/// Short CLI names: f32, f64, c64, c128.
std::string_view to_string(ElementType type) noexcept;
std::optional<ElementType> parse_element_type(std::string_view name) noexcept;

template <class T>
struct ScalarTraits;

template <>
struct ScalarTraits<float> {
  using real_type = float;
  static constexpr ElementType type = ElementType::real32;
  static constexpr bool is_complex = false;
};
template <>
struct ScalarTraits<double> {
  using real_type = double;
  static constexpr ElementType type = ElementType::real64;
  static constexpr bool is_complex = false;
};
template <>
struct ScalarTraits<std::complex<float>> {
  using real_type = float;
  static constexpr ElementType type = ElementType::complex64;
  static constexpr bool is_complex = true;
};
template <>
struct ScalarTraits<std::complex<double>> {
  using real_type = double;
  static constexpr ElementType type = ElementType::complex128;
  static constexpr bool is_complex = true;
};

template <class T>
concept Scalar = requires { typename ScalarTraits<T>::real_type; };

template <Scalar T>
using real_t = typename ScalarTraits<T>::real_type;

template <Scalar T>
inline constexpr ElementType element_type_of = ScalarTraits<T>::type;

template <Scalar T>
inline constexpr real_t<T> epsilon = std::numeric_limits<real_t<T>>::epsilon();

// Conjugation is the identity on real types.
template <Scalar T>
constexpr T conj(T x) noexcept {
  if constexpr (ScalarTraits<T>::is_complex) {
    return {x.real(), -x.imag()};
  } else {
    return x;
  }
}

template <Scalar T>
constexpr real_t<T> real_part(T x) noexcept {
  if constexpr (ScalarTraits<T>::is_complex) {
    return x.real();
  } else {
    return x;
  }
}

template <Scalar T>
constexpr real_t<T> abs2(T x) noexcept {
  if constexpr (ScalarTraits<T>::is_complex) {
    return x.real() * x.real() + x.imag() * x.imag();
  } else {
    return x * x;
  }
}

template <Scalar T>
real_t<T> magnitude(T x) noexcept {
  return std::abs(x);
}

// Divide by a real scalar without going through complex division.
template <Scalar T>
constexpr T div_real(T x, real_t<T> r) noexcept {
  if constexpr (ScalarTraits<T>::is_complex) {
    return {x.real() / r, x.imag() / r};
  } else {
    return x / r;
  }
}

/// Calls f(std::type_identity<T>{}) with T the scalar type for `type`.
template <class F>
decltype(auto) visit_element_type(ElementType type, F&& f) {
  switch (type) {
    case ElementType::real32:
      return f(std::type_identity<float>{});
    case ElementType::real64:
      return f(std::type_identity<double>{});
    case ElementType::complex64:
      return f(std::type_identity<std::complex<float>>{});
    case ElementType::complex128:
      return f(std::type_identity<std::complex<double>>{});
  }
  throw Error(Errc::invalid_argument, "unknown element type");
}

}  // namespace bcmg
