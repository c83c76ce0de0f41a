#include <random>

#include "doctest.h"
#include "lwconv/carafe.hpp"
#include "lwconv/error.hpp"
#include "lwconv/init.hpp"
#include "lwconv/ops.hpp"
#include "oracles.hpp"

using namespace lwconv;

namespace {

Tensor one_hot_center(std::int64_t n, std::int64_t k, std::int64_t h, std::int64_t w) {
  Tensor t({n, k * k, h, w});
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t i = 0; i < h; ++i)
      for (std::int64_t j = 0; j < w; ++j) t.at(b, (k * k) / 2, i, j) = 1.0;
  return t;
}

// Random probability vectors restricted to taps that land inside the source.
Tensor interior_kernels(std::int64_t h, std::int64_t w, std::int64_t scale, std::int64_t k,
                        std::mt19937_64& g) {
  Tensor t = oracle::random_tensor({1, k * k, h * scale, w * scale}, g, 0.0, 1.0);
  const std::int64_t r = k / 2;
  for (std::int64_t i = 0; i < h * scale; ++i)
    for (std::int64_t j = 0; j < w * scale; ++j) {
      double total = 0;
      for (std::int64_t a = 0; a < k; ++a)
        for (std::int64_t b = 0; b < k; ++b) {
          const std::int64_t y = i / scale + a - r, x = j / scale + b - r;
          if (y < 0 || y >= h || x < 0 || x >= w) t.at(0, a * k + b, i, j) = 0.0;
          total += t.at(0, a * k + b, i, j);
        }
      for (std::int64_t tap = 0; tap < k * k; ++tap) t.at(0, tap, i, j) /= total;
    }
  return t;
}

Tensor staged_carafe(const Tensor& x, const CarafeParams& p) {
  const Tensor compressed = oracle::conv_same(x, p.compressor);
  const Tensor encoded = oracle::conv_same(compressed, p.encoder);
  Tensor field = oracle::pixel_shuffle(encoded, p.scale);
  for (std::int64_t n = 0; n < field.n(); ++n)
    for (std::int64_t i = 0; i < field.h(); ++i)
      for (std::int64_t j = 0; j < field.w(); ++j) {
        std::vector<double> z;
        for (std::int64_t c = 0; c < field.c(); ++c) z.push_back(field.at(n, c, i, j));
        const auto prob = oracle::softmax(z);
        for (std::int64_t c = 0; c < field.c(); ++c) field.at(n, c, i, j) = prob[static_cast<std::size_t>(c)];
      }
  return oracle::reassemble(x, field, p.scale, p.k_up);
}

}  // namespace

TEST_CASE("predict_kernels: shape and normalisation") {
  Rng rng(1);
  const auto p = CarafeParams::init(16, rng);
  CHECK(p.mid_channels() == 16);
  CHECK(p.encoder.shape() == Shape{100, 16, 3, 3});
  const KernelField k = predict_kernels(rng.tensor({1, 16, 8, 8}), p);
  REQUIRE(k.weights.shape() == Shape{1, 25, 16, 16});
  for (std::int64_t i = 0; i < 16; ++i)
    for (std::int64_t j = 0; j < 16; ++j) {
      double total = 0;
      for (std::int64_t t = 0; t < 25; ++t) {
        CHECK(k.weights.at(0, t, i, j) >= 0.0);
        total += k.weights.at(0, t, i, j);
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("predict_kernels: compressed width defaults to min(C, 64)") {
  Rng rng(2);
  CHECK(CarafeParams::init(100, rng, 2, 3, 1).mid_channels() == 64);
  CHECK(CarafeParams::init(100, rng, 2, 3, 1, 8).mid_channels() == 8);
}

TEST_CASE("predict_kernels: one location matches a direct 25-way softmax") {
  std::mt19937_64 g(3);
  Rng rng(3);
  const auto p = CarafeParams::init(4, rng);
  const Tensor x = oracle::random_tensor({1, 4, 3, 3}, g);
  const Tensor logits =
      oracle::pixel_shuffle(oracle::conv_same(oracle::conv_same(x, p.compressor), p.encoder), 2);
  CHECK(max_abs_diff(logits, predict_kernel_logits(x, p)) < 1e-12);
  const KernelField k = predict_kernels(x, p);
  for (auto [i, j] : {std::pair{0, 0}, std::pair{3, 4}, std::pair{5, 5}}) {
    std::vector<double> z;
    for (int t = 0; t < 25; ++t) z.push_back(logits.at(0, t, i, j));
    const auto expected = oracle::softmax(z);
    for (int t = 0; t < 25; ++t) CHECK(std::abs(k.weights.at(0, t, i, j) - expected[static_cast<std::size_t>(t)]) < 1e-12);
  }
}

TEST_CASE("reassemble: constant input with interior kernels stays constant") {
  std::mt19937_64 g(4);
  for (std::int64_t scale : {1, 2, 3}) {
    const Tensor x({1, 3, 5, 4}, -2.75);
    const Tensor k = interior_kernels(5, 4, scale, 5, g);
    const Tensor y = reassemble(x, {k}, scale, 5);
    for (double v : y.data()) CHECK(std::abs(v + 2.75) < 1e-9);
  }
}

TEST_CASE("reassemble: one-hot centre kernels are nearest-neighbour upsampling") {
  std::mt19937_64 g(5);
  const Tensor x = oracle::random_tensor({2, 3, 4, 5}, g);
  for (std::int64_t k : {1, 3, 5}) {
    CHECK(reassemble(x, {one_hot_center(2, k, 8, 10)}, 2, k) == nearest_upsample(x, 2));
    CHECK(reassemble(x, {one_hot_center(2, k, 4, 5)}, 1, k) == x);
  }
}

TEST_CASE("reassemble matches the per-pixel weighted-sum oracle") {
  std::mt19937_64 g(6);
  for (std::int64_t k : {3, 5}) {
    const Tensor x = oracle::random_tensor({2, 3, 4, 3}, g);
    const Tensor field = softmax_over_channels(oracle::random_tensor({2, k * k, 8, 6}, g, -3, 3));
    CHECK(max_abs_diff(reassemble(x, {field}, 2, k), oracle::reassemble(x, field, 2, k)) < 1e-12);
  }
}

TEST_CASE("reassemble: interior outputs stay within the neighbourhood range") {
  std::mt19937_64 g(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor x = oracle::random_tensor({1, 2, 7, 7}, g);
    const Tensor field = softmax_over_channels(oracle::random_tensor({1, 9, 14, 14}, g, -4, 4));
    const Tensor y = reassemble(x, {field}, 2, 3);
    for (std::int64_t c = 0; c < 2; ++c)
      for (std::int64_t i = 2; i < 12; ++i)
        for (std::int64_t j = 2; j < 12; ++j) {
          double lo = 1e9, hi = -1e9;
          for (int a = -1; a <= 1; ++a)
            for (int b = -1; b <= 1; ++b) {
              lo = std::min(lo, x.at(0, c, i / 2 + a, j / 2 + b));
              hi = std::max(hi, x.at(0, c, i / 2 + a, j / 2 + b));
            }
          CHECK(y.at(0, c, i, j) >= lo - 1e-12);
          CHECK(y.at(0, c, i, j) <= hi + 1e-12);
        }
  }
}

TEST_CASE("reassemble is linear in the input for fixed kernels") {
  std::mt19937_64 g(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor x = oracle::random_tensor({1, 2, 3, 4}, g);
    const Tensor y = oracle::random_tensor({1, 2, 3, 4}, g);
    const KernelField k{softmax_over_channels(oracle::random_tensor({1, 25, 6, 8}, g))};
    const double a = 1.7, b = -0.4;
    const Tensor lhs = reassemble(axpby(a, x, b, y), k, 2, 5);
    const Tensor rhs = axpby(a, reassemble(x, k, 2, 5), b, reassemble(y, k, 2, 5));
    CHECK(max_abs_diff(lhs, rhs) < 1e-10);
  }
}

TEST_CASE("reassemble: inconsistent shapes are rejected") {
  const Tensor x({1, 2, 3, 3});
  CHECK_THROWS_AS(reassemble(x, {Tensor({1, 25, 6, 5})}, 2, 5), ShapeError);
  CHECK_THROWS_AS(reassemble(x, {Tensor({1, 9, 6, 6})}, 2, 5), ShapeError);
  CHECK_THROWS_AS(reassemble(x, {Tensor({2, 25, 6, 6})}, 2, 5), ShapeError);
  CHECK_THROWS(reassemble(x, {Tensor({1, 16, 6, 6})}, 2, 4));
}

TEST_CASE("carafe_forward: shape, staged composition and MAC count") {
  std::mt19937_64 g(9);
  Rng rng(9);
  const auto p = CarafeParams::init(16, rng);
  MacCounter counter;
  const Tensor x = oracle::random_tensor({1, 16, 8, 8}, g);
  const Tensor y = carafe_forward(x, p, &counter);
  CHECK(y.shape() == Shape{1, 16, 16, 16});
  CHECK(max_abs_diff(y, staged_carafe(x, p)) < 1e-12);
  const std::uint64_t compress = 8 * 8 * 16 * 16;
  const std::uint64_t encode = 8 * 8 * 16 * 9 * 100;
  const std::uint64_t reassembly = 16 * 16 * 16 * 25;
  CHECK(counter.macs == compress + encode + reassembly);

  Rng small(10);
  const auto q = CarafeParams::init(3, small, 3, 3, 1, 2);
  const Tensor z = oracle::random_tensor({2, 3, 2, 3}, g);
  CHECK(max_abs_diff(carafe_forward(z, q), staged_carafe(z, q)) < 1e-12);
}

TEST_CASE("carafe: invalid hyperparameters") {
  Rng rng(11);
  CHECK_THROWS(CarafeParams::init(4, rng, 0));
  CHECK_THROWS(CarafeParams::init(4, rng, 2, 4));
  CHECK_THROWS(CarafeParams::init(4, rng, 2, 5, 2));
  const auto p = CarafeParams::init(4, rng);
  CHECK_THROWS_AS(carafe_forward(Tensor({1, 5, 3, 3}), p), ShapeError);
}
