#include "lwconv/init.hpp"

#include <cmath>

#include "lwconv/error.hpp"

namespace lwconv {

Tensor Rng::tensor(const Shape& shape, double lo, double hi) {
  Tensor t(shape);
  for (double& v : t.data()) v = uniform(lo, hi);
  return t;
}

std::vector<double> Rng::vector(std::size_t len, double lo, double hi) {
  std::vector<double> v(len);
  for (double& x : v) x = uniform(lo, hi);
  return v;
}

Tensor Rng::kaiming_uniform(const Shape& shape, std::int64_t fan_in) {
  if (fan_in < 1) throw ValueError("kaiming_uniform: fan_in must be >= 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return tensor(shape, -bound, bound);
}

}  // namespace lwconv
