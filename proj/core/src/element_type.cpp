#include "bcmg/element_type.hpp"

namespace bcmg {

std::size_t element_size(ElementType type) noexcept {
  switch (type) {
    case ElementType::real32:
      return 4;
    case ElementType::real64:
    case ElementType::complex64:
      return 8;
    case ElementType::complex128:
      return 16;
  }
  return 0;
}

bool is_complex(ElementType type) noexcept {
  return type == ElementType::complex64 || type == ElementType::complex128;
}

std::string_view to_string(ElementType type) noexcept {
  switch (type) {
    case ElementType::real32:
      return "f32";
    case ElementType::real64:
      return "f64";
    case ElementType::complex64:
      return "c64";
    case ElementType::complex128:
      return "c128";
  }
  return "?";
}

std::optional<ElementType> parse_element_type(std::string_view name) noexcept {
  if (name == "f32") return ElementType::real32;
  if (name == "f64") return ElementType::real64;
  if (name == "c64") return ElementType::complex64;
  if (name == "c128") return ElementType::complex128;
  return std::nullopt;
}

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::dimension_mismatch:
      return "dimension mismatch";
    case Errc::type_structure_mismatch:
      return "type-structure mismatch";
    case Errc::invalid_argument:
      return "invalid argument";
    case Errc::out_of_range:
      return "out of range";
    case Errc::out_of_memory:
      return "out of memory";
    case Errc::stale_handle:
      return "stale handle";
    case Errc::foreign_handle:
      return "foreign handle";
    case Errc::overlapping_copy:
      return "overlapping copy";
    case Errc::double_publish:
      return "double publish";
    case Errc::unknown_device:
      return "unknown device";
    case Errc::incomplete_registry:
      return "incomplete registry";
    case Errc::not_quiescent:
      return "workers not quiescent";
    case Errc::coordinator_busy:
      return "coordinator busy";
    case Errc::staging_misuse:
      return "staging buffer misuse";
    case Errc::non_bijective:
      return "non-bijective permutation";
    case Errc::not_positive_definite:
      return "not positive definite";
    case Errc::no_convergence:
      return "no convergence";
    case Errc::format_error:
      return "format error";
  }
  return "unknown error";
}

}  // namespace bcmg
