#include "bcmg/matrix_io.hpp"

#include <bit>
#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace bcmg {

namespace {

constexpr std::array<char, 4> kMagic{'B', 'C', 'M', 'G'};

void put_u32(std::byte* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::byte>((v >> (8 * i)) & 0xffu);
}

std::uint32_t get_u32(const std::byte* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(in[i]) << (8 * i);
  return v;
}

// Element payloads are written in host byte order; all supported targets
// are little-endian, matching the header.
static_assert(std::endian::native == std::endian::little, "BCMG payloads assume a little-endian host");

}  // namespace

ElementType element_type_of_matrix(const AnyMatrix& m) noexcept {
  return std::visit([](const auto& x) { return x.descriptor().element_type; }, m);
}

std::vector<std::byte> encode_matrix(const AnyMatrix& m) {
  return std::visit(
      [](const auto& x) {
        using T = typename std::decay_t<decltype(x)>::value_type;
        if (x.rows() > std::numeric_limits<std::uint32_t>::max() ||
            x.cols() > std::numeric_limits<std::uint32_t>::max()) {
          throw Error(Errc::format_error, "matrix too large for a u32 header");
        }
        std::vector<std::byte> out(kMatrixHeaderBytes + x.size() * sizeof(T));
        std::memcpy(out.data(), kMagic.data(), kMagic.size());
        out[4] = static_cast<std::byte>(element_type_of<T>);
        put_u32(out.data() + 8, static_cast<std::uint32_t>(x.rows()));
        put_u32(out.data() + 12, static_cast<std::uint32_t>(x.cols()));
        if (x.size() > 0) std::memcpy(out.data() + kMatrixHeaderBytes, x.data().data(), x.size() * sizeof(T));
        return out;
      },
      m);
}

AnyMatrix decode_matrix(std::span<const std::byte> bytes) {
  if (bytes.size() < kMatrixHeaderBytes) throw Error(Errc::format_error, "file shorter than the 16-byte header");
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) throw Error(Errc::format_error, "bad magic");
  const auto code = std::to_integer<std::uint8_t>(bytes[4]);
  if (code > 3) throw Error(Errc::format_error, "unknown element type code " + std::to_string(code));
  for (int i = 5; i < 8; ++i) {
    if (bytes[i] != std::byte{0}) throw Error(Errc::format_error, "reserved header bytes must be zero");
  }
  const std::size_t rows = get_u32(bytes.data() + 8);
  const std::size_t cols = get_u32(bytes.data() + 12);
  return visit_element_type(static_cast<ElementType>(code), [&]<class T>(std::type_identity<T>) -> AnyMatrix {
    const std::size_t payload = rows * cols * sizeof(T);
    if (bytes.size() != kMatrixHeaderBytes + payload) {
      throw Error(Errc::format_error, "payload is " + std::to_string(bytes.size() - kMatrixHeaderBytes) +
                                          " bytes, header implies " + std::to_string(payload));
    }
    DenseMatrix<T> m(rows, cols);
    if (payload > 0) std::memcpy(m.data().data(), bytes.data() + kMatrixHeaderBytes, payload);
    return m;
  });
}

void write_matrix_file(const std::filesystem::path& path, const AnyMatrix& m) {
  const auto bytes = encode_matrix(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::format_error, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::format_error, "short write to " + path.string());
}

AnyMatrix read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::format_error, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_matrix(std::as_bytes(std::span<const char>(raw)));
}

}  // namespace bcmg
