#ifndef LWCONV_TENSOR_IO_HPP
#define LWCONV_TENSOR_IO_HPP

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "lwconv/tensor.hpp"

namespace lwconv {

// LTB1 layout:
//   [0,4)   "LTB1"
//   [4]     rank, always 4
//   [5,21)  n, c, h, w as uint32 little-endian
//   [21,..) n*c*h*w float64 little-endian, row-major
inline constexpr std::size_t kLtbHeaderSize = 21;

std::vector<std::byte> encode_tensor(const Tensor& t);

// Throws FormatError (bad_magic, bad_rank, truncated, length_mismatch).
Tensor decode_tensor(std::span<const std::byte> bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace lwconv

#endif  // LWCONV_TENSOR_IO_HPP
