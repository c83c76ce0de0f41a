#ifndef LWCONV_INIT_HPP
#define LWCONV_INIT_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "lwconv/tensor.hpp"

namespace lwconv {

// Seeded source for parameter and test-data generation. Streams are
// reproducible within one build; no cross-platform guarantee.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  std::uint64_t next() { return engine_(); }

  // Tensor with i.i.d. U[lo, hi) entries.
  Tensor tensor(const Shape& shape, double lo = -1.0, double hi = 1.0);
  std::vector<double> vector(std::size_t len, double lo, double hi);

  // Weight tensor drawn from U[-b, b], b = 1/sqrt(fan_in).
  Tensor kaiming_uniform(const Shape& shape, std::int64_t fan_in);

 private:
  std::mt19937_64 engine_;
};

}  // namespace lwconv

#endif  // LWCONV_INIT_HPP
