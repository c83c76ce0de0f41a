#ifndef LWCONV_TENSOR_HPP
#define LWCONV_TENSOR_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lwconv {

struct Shape {
  std::int64_t n = 0;
  std::int64_t c = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;

  constexpr std::int64_t numel() const noexcept { return n * c * h * w; }
  constexpr std::int64_t spatial() const noexcept { return h * w; }

  friend constexpr bool operator==(const Shape&, const Shape&) = default;

  // "(n,c,h,w)"
  std::string str() const;
};

// Dense NCHW tensor of doubles, width fastest-varying.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::int64_t n() const noexcept { return shape_.n; }
  std::int64_t c() const noexcept { return shape_.c; }
  std::int64_t h() const noexcept { return shape_.h; }
  std::int64_t w() const noexcept { return shape_.w; }
  std::int64_t numel() const noexcept { return shape_.numel(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  std::size_t offset(std::int64_t n, std::int64_t c, std::int64_t h,
                     std::int64_t w) const noexcept {
    return static_cast<std::size_t>(((n * shape_.c + c) * shape_.h + h) * shape_.w + w);
  }
  double& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) noexcept {
    return data_[offset(n, c, h, w)];
  }
  double at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const noexcept {
    return data_[offset(n, c, h, w)];
  }

  // Contiguous h*w plane of one (sample, channel).
  std::span<const double> plane(std::int64_t n, std::int64_t c) const noexcept {
    return std::span<const double>(data_).subspan(offset(n, c, 0, 0),
                                                  static_cast<std::size_t>(shape_.spatial()));
  }
  std::span<double> plane(std::int64_t n, std::int64_t c) noexcept {
    return std::span<double>(data_).subspan(offset(n, c, 0, 0),
                                            static_cast<std::size_t>(shape_.spatial()));
  }

  // Bitwise equality of shape and payload.
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Throws ValueError when any dimension is < 1.
void require_valid_shape(const Shape& shape, std::string_view what);

// Throws ValueError naming `op` if the tensor contains NaN or Inf.
void require_finite(const Tensor& t, std::string_view op);
bool all_finite(const Tensor& t) noexcept;

double max_abs_diff(const Tensor& a, const Tensor& b);
double sum(const Tensor& t) noexcept;

}  // namespace lwconv

#endif  // LWCONV_TENSOR_HPP
