#include <random>

#include "doctest.h"
#include "lwconv/error.hpp"
#include "lwconv/ghost.hpp"
#include "lwconv/init.hpp"
#include "lwconv/ops.hpp"
#include "oracles.hpp"

using namespace lwconv;

namespace {

Tensor ghost_oracle(const Tensor& x, const GhostSpec& s) {
  const Tensor intrinsic = oracle::conv_same(x, s.primary);
  Tensor out = oracle::cat(intrinsic, oracle::conv_same(intrinsic, s.cheap, s.intrinsic_channels()));
  if (s.activation == Activation::sigmoid) out = oracle::map1(out, oracle::sigmoid);
  return out;
}

Tensor bottleneck_oracle(const Tensor& x, const GhostBottleneckSpec& s) {
  return oracle::map2(x, ghost_oracle(ghost_oracle(x, s.expand), s.project),
                      [](double a, double b) { return a + b; });
}

Tensor c3_oracle(const Tensor& x, const C3GhostSpec& s) {
  Tensor a = oracle::conv_same(x, s.cv1.weight);
  for (const auto& b : s.bottlenecks) a = bottleneck_oracle(a, b);
  const Tensor b = oracle::conv_same(x, s.cv2.weight);
  return oracle::conv_same(oracle::cat(a, b), s.cv3.weight);
}

std::uint64_t enumerate_params(const Layer& layer) {
  std::uint64_t total = 0;
  for (const auto& p : layer.parameters()) {
    if (p.role == ParamRole::weight) total += p.values.size();
  }
  return total;
}

}  // namespace

TEST_CASE("ghost_conv: shape contract") {
  Rng rng(1);
  const auto s = GhostSpec::init(4, 8, rng);
  CHECK(ghost_conv(rng.tensor({1, 4, 4, 4}), s).shape() == Shape{1, 8, 4, 4});
}

TEST_CASE("ghost_conv: parameter count versus standard convolution") {
  Rng rng(2);
  GhostConvLayer ghost(GhostSpec::init(64, 64, rng, 3, 2, 3));
  Conv2dLayer standard(ConvParams::init(ConvSpec::same(64, 64, 3), rng));
  CHECK(enumerate_params(standard) == 36864);
  CHECK(enumerate_params(ghost) == 18720);
  CHECK(count_parameters(ghost).weights == 18720);
  CHECK(static_cast<double>(18720) / 36864 == doctest::Approx(0.5078).epsilon(1e-4));
}

TEST_CASE("ghost_conv: centre-delta cheap kernel copies the intrinsic maps") {
  Rng rng(3);
  auto s = GhostSpec::init(3, 6, rng, 3);
  std::fill(s.cheap.data().begin(), s.cheap.data().end(), 0.0);
  for (std::int64_t c = 0; c < 3; ++c) s.cheap.at(c, 0, 1, 1) = 1.0;
  const Tensor y = ghost_conv(rng.tensor({2, 3, 5, 5}), s);
  const auto [first, second] = split_channels(y, 3);
  CHECK(first == second);
}

TEST_CASE("ghost_conv matches the loop oracle") {
  std::mt19937_64 g(4);
  for (std::int64_t ratio : {2, 3}) {
    for (Activation act : {Activation::none, Activation::sigmoid}) {
      Rng rng(static_cast<std::uint64_t>(ratio));
      const auto s = GhostSpec::init(4, 6, rng, 3, ratio, 3, act);
      const Tensor x = oracle::random_tensor({1, 4, 5, 4}, g);
      CHECK(max_abs_diff(ghost_conv(x, s), ghost_oracle(x, s)) < 1e-12);
    }
  }
}

TEST_CASE("ghost_conv: output has exactly N channels for any ratio") {
  Rng rng(5);
  for (std::int64_t ratio : {2, 3, 4, 6, 12}) {
    const auto s = GhostSpec::init(5, 12, rng, 1, ratio);
    CHECK(ghost_conv(rng.tensor({1, 5, 3, 3}), s).c() == 12);
  }
}

TEST_CASE("ghost_conv has fewer parameters than standard conv when K^2 M exceeds d^2") {
  Rng rng(6);
  for (std::int64_t k : {1, 3, 5}) {
    for (std::int64_t m : {1, 4, 10, 16}) {
      for (std::int64_t n : {2, 8, 32}) {
        if (k * k * m <= 9) continue;  // cheap 3x3 then costs at least as much as it saves
        GhostConvLayer ghost(GhostSpec::init(m, n, rng, k, 2, 3));
        Conv2dLayer standard(ConvParams::init(ConvSpec::same(m, n, k), rng));
        CHECK(count_parameters(ghost).weights < count_parameters(standard).weights);
      }
    }
  }
}

TEST_CASE("ghost_conv: divisibility and shape errors") {
  Rng rng(7);
  CHECK_THROWS(GhostSpec::init(4, 7, rng));
  CHECK_THROWS(GhostSpec::init(4, 8, rng, 2));
  const auto s = GhostSpec::init(4, 8, rng);
  CHECK_THROWS_AS(ghost_conv(Tensor({1, 3, 4, 4}), s), ShapeError);
  CHECK_THROWS_AS(parse_activation("relu"), ValueError);
}

TEST_CASE("ghost_bottleneck: zero branch is a pure residual") {
  Rng rng(8);
  auto s = GhostBottleneckSpec::init(16, rng);
  for (Tensor* t : {&s.expand.primary, &s.expand.cheap, &s.project.primary, &s.project.cheap}) {
    std::fill(t->data().begin(), t->data().end(), 0.0);
  }
  const Tensor x = rng.tensor({1, 16, 8, 8});
  const Tensor y = ghost_bottleneck(x, s);
  CHECK(y.shape() == Shape{1, 16, 8, 8});
  CHECK(y == x);
}

TEST_CASE("ghost_bottleneck matches the two-ghost-plus-add oracle") {
  std::mt19937_64 g(9);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const auto s = GhostBottleneckSpec::init(8, rng);
    const Tensor x = oracle::random_tensor({1, 8, 4, 5}, g);
    const Tensor y = ghost_bottleneck(x, s);
    CHECK(max_abs_diff(y, bottleneck_oracle(x, s)) < 1e-12);
    const Tensor branch = ghost_conv(ghost_conv(x, s.expand), s.project);
    CHECK(max_abs_diff(subtract(y, x), branch) < 1e-12);
  }
  Rng rng(10);
  const auto s = GhostBottleneckSpec::init(8, rng);
  CHECK_THROWS_AS(ghost_bottleneck(Tensor({1, 4, 3, 3}), s), ShapeError);
}

TEST_CASE("c3ghost with no bottlenecks is split, concat and 1x1 conv") {
  std::mt19937_64 g(11);
  Rng rng(12);
  const auto s = C3GhostSpec::init(6, 8, 0, rng);
  const Tensor x = oracle::random_tensor({1, 6, 4, 4}, g);
  const Tensor a = oracle::conv_same(x, s.cv1.weight);
  const Tensor b = oracle::conv_same(x, s.cv2.weight);
  const Tensor expected = oracle::conv_same(oracle::cat(a, b), s.cv3.weight);
  CHECK(max_abs_diff(c3ghost(x, s), expected) < 1e-12);
}

TEST_CASE("c3ghost: shape contract") {
  Rng rng(13);
  const auto s = C3GhostSpec::init(32, 32, 1, rng);
  CHECK(s.hidden == 16);
  CHECK(c3ghost(rng.tensor({1, 32, 16, 16}), s).shape() == Shape{1, 32, 16, 16});
  const auto wide = C3GhostSpec::init(8, 16, 2, rng);
  CHECK(c3ghost(rng.tensor({2, 8, 4, 4}), wide).shape() == Shape{2, 16, 4, 4});
}

TEST_CASE("c3ghost matches a straight-line composition") {
  std::mt19937_64 g(14);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Rng rng(seed);
    const auto s = C3GhostSpec::init(8, 8, static_cast<std::int64_t>(seed % 3), rng);
    const Tensor x = oracle::random_tensor({1, 8, 5, 5}, g);
    CHECK(max_abs_diff(c3ghost(x, s), c3_oracle(x, s)) < 1e-10);
  }
}

TEST_CASE("c3ghost: bookkeeping errors") {
  Rng rng(15);
  CHECK_THROWS(C3GhostSpec::init(8, 8, 1, rng, 3));  // bottleneck hidden 1 not divisible by s=2
  CHECK_THROWS(C3GhostSpec::init(8, 1, 0, rng));     // hidden would be 0
  const auto s = C3GhostSpec::init(8, 8, 1, rng);
  CHECK_THROWS_AS(c3ghost(Tensor({1, 4, 3, 3}), s), ShapeError);
}
