#include "lwconv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "lwconv/error.hpp"

namespace lwconv {

std::string Shape::str() const {
  std::ostringstream os;
  os << '(' << n << ',' << c << ',' << h << ',' << w << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape) {
  require_valid_shape(shape, "tensor");
  data_.assign(static_cast<std::size_t>(shape.numel()), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  require_valid_shape(shape, "tensor");
  if (static_cast<std::int64_t>(data_.size()) != shape.numel()) {
    throw ShapeError("tensor payload has " + std::to_string(data_.size()) +
                     " elements but shape " + shape.str() + " needs " +
                     std::to_string(shape.numel()));
  }
}

bool operator==(const Tensor& a, const Tensor& b) {
  if (a.shape_ != b.shape_) return false;
  return a.data_.empty() ||
         std::memcmp(a.data_.data(), b.data_.data(), a.data_.size() * sizeof(double)) == 0;
}

void require_valid_shape(const Shape& shape, std::string_view what) {
  if (shape.n < 1 || shape.c < 1 || shape.h < 1 || shape.w < 1) {
    throw ValueError(std::string(what) + ": every dimension must be >= 1, got " + shape.str());
  }
}

bool all_finite(const Tensor& t) noexcept {
  const auto d = t.data();
  return std::all_of(d.begin(), d.end(), [](double v) { return std::isfinite(v); });
}

void require_finite(const Tensor& t, std::string_view op) {
  if (!all_finite(t)) {
    throw ValueError(std::string(op) + ": tensor contains non-finite values");
  }
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("max_abs_diff: shapes " + a.shape().str() + " and " + b.shape().str() +
                     " differ");
  }
  double m = 0.0;
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

double sum(const Tensor& t) noexcept {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s;
}

}  // namespace lwconv
