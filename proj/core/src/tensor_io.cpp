#include "lwconv/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "lwconv/error.hpp"

namespace lwconv {
namespace {

constexpr std::array<char, 4> kMagic = {'L', 'T', 'B', '1'};

template <class U>
void put_le(std::vector<std::byte>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
  }
}

template <class U>
U get_le(std::span<const std::byte> bytes) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(std::to_integer<unsigned>(bytes[i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::vector<std::byte> encode_tensor(const Tensor& t) {
  require_valid_shape(t.shape(), "encode_tensor");
  for (std::int64_t d : {t.n(), t.c(), t.h(), t.w()}) {
    if (d > std::numeric_limits<std::uint32_t>::max()) {
      throw ValueError("encode_tensor: dimension exceeds 32 bits");
    }
  }
  std::vector<std::byte> out;
  out.reserve(kLtbHeaderSize + static_cast<std::size_t>(t.numel()) * 8);
  for (char ch : kMagic) out.push_back(static_cast<std::byte>(ch));
  out.push_back(std::byte{4});
  for (std::int64_t d : {t.n(), t.c(), t.h(), t.w()}) put_le(out, static_cast<std::uint32_t>(d));
  for (double v : t.data()) put_le(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

Tensor decode_tensor(std::span<const std::byte> bytes) {
  using Kind = FormatError::Kind;
  if (bytes.size() < kMagic.size()) {
    throw FormatError(Kind::truncated, "LTB1: file shorter than the magic number");
  }
  for (std::size_t i = 0; i < kMagic.size(); ++i) {
    if (static_cast<char>(bytes[i]) != kMagic[i]) {
      throw FormatError(Kind::bad_magic, "LTB1: bad magic, not an LTB1 tensor file");
    }
  }
  if (bytes.size() < kLtbHeaderSize) {
    throw FormatError(Kind::truncated, "LTB1: truncated header");
  }
  const auto rank = std::to_integer<unsigned>(bytes[4]);
  if (rank != 4) {
    throw FormatError(Kind::bad_rank, "LTB1: dimension count " + std::to_string(rank) +
                                          " (expected 4)");
  }
  std::array<std::uint64_t, 4> dims{};
  for (std::size_t i = 0; i < 4; ++i) dims[i] = get_le<std::uint32_t>(bytes.subspan(5 + 4 * i));
  for (std::uint64_t d : dims) {
    if (d == 0) throw FormatError(Kind::length_mismatch, "LTB1: zero-sized dimension");
  }
  const std::size_t payload = bytes.size() - kLtbHeaderSize;
  if (payload % 8 != 0) {
    throw FormatError(Kind::truncated, "LTB1: payload ends mid-element");
  }
  // Divide instead of multiply so four 32-bit dims cannot overflow.
  std::uint64_t remaining = payload / 8;
  bool matches = true;
  for (std::uint64_t d : dims) {
    if (remaining % d != 0) {
      matches = false;
      break;
    }
    remaining /= d;
  }
  if (!matches || remaining != 1) {
    throw FormatError(Kind::length_mismatch,
                      "LTB1: declared shape holds a different element count than the payload (" +
                          std::to_string(payload / 8) + " elements present)");
  }
  std::vector<double> data(payload / 8);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes.subspan(kLtbHeaderSize + 8 * i)));
  }
  Tensor t({static_cast<std::int64_t>(dims[0]), static_cast<std::int64_t>(dims[1]),
            static_cast<std::int64_t>(dims[2]), static_cast<std::int64_t>(dims[3])},
           std::move(data));
  require_finite(t, "LTB1");
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  const auto bytes = encode_tensor(t);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError(FormatError::Kind::io, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FormatError(FormatError::Kind::io, "failed writing " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_tensor(std::as_bytes(std::span<const char>(raw)));
}

}  // namespace lwconv
