#include <cmath>
#include <random>

#include "doctest.h"
#include "gradcheck_suite.hpp"
#include "lwconv/error.hpp"
#include "lwconv/gradcheck.hpp"
#include "lwconv/graph.hpp"
#include "lwconv/init.hpp"
#include "lwconv/layers.hpp"
#include "lwconv/scconv.hpp"

using namespace lwconv;

namespace {

// Delegates to a conv layer but doubles one weight gradient.
class CorruptedConv final : public Layer {
 public:
  explicit CorruptedConv(ConvParams p) : inner_(std::move(p)) {}
  std::string_view kind() const override { return "corrupted_conv"; }
  Shape output_shape(const Shape& s) const override { return inner_.output_shape(s); }
  Tensor forward(const Tensor& x, MacCounter* c) const override { return inner_.forward(x, c); }
  LayerGrads backward(const Tensor& x, const Tensor& g) const override {
    LayerGrads r = inner_.backward(x, g);
    r.params[0][3] *= 2.0;
    return r;
  }
  std::vector<ParamRef> parameters() override { return inner_.parameters(); }
  std::vector<ConstParamRef> parameters() const override {
    const Layer& l = inner_;
    return l.parameters();
  }

 private:
  Conv2dLayer inner_;
};

}  // namespace

TEST_CASE("numeric_gradient: quadratic, linear and sigmoid") {
  const std::vector<double> three{3.0};
  auto sq = [](std::span<const double> t) { return t[0] * t[0]; };
  CHECK(std::abs(numeric_gradient(sq, three, 1e-6)[0] - 6.0) < 1e-6);

  auto scaled = [](std::span<const double> t) { return 2.5 * t[0]; };
  for (double x0 : {0.0, 0.125, -0.75}) {
    const std::vector<double> at{x0};
    CHECK(std::abs(numeric_gradient(scaled, at, 1.0 / 1024)[0] - 2.5) < 1e-10);
  }
  const std::vector<double> theta{0.3, -1.2, 4.0};
  auto linear = [](std::span<const double> t) { return 2.5 * t[0] - 0.5 * t[1] + 7.0 * t[2]; };
  const auto gl = numeric_gradient(linear, theta, 0.5);
  CHECK(std::abs(gl[0] - 2.5) < 1e-10);
  CHECK(std::abs(gl[1] + 0.5) < 1e-10);
  CHECK(std::abs(gl[2] - 7.0) < 1e-10);

  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> d(-3, 3);
  std::vector<double> v(8);
  for (double& x : v) x = d(g);
  auto sum_sigmoid = [](std::span<const double> t) {
    double s = 0;
    for (double x : t) s += 1.0 / (1.0 + std::exp(-x));
    return s;
  };
  const auto gs = numeric_gradient(sum_sigmoid, v, 1e-6);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double s = 1.0 / (1.0 + std::exp(-v[i]));
    CHECK(std::abs(gs[i] - s * (1 - s)) < 1e-7);
  }
}

TEST_CASE("numeric_gradient error is second order in eps") {
  auto cube = [](std::span<const double> t) { return t[0] * t[0] * t[0]; };
  const std::vector<double> x{1.3};
  const double exact = 3 * 1.3 * 1.3;
  for (double eps : {1e-1, 4e-2, 1e-2}) {
    const double e1 = std::abs(numeric_gradient(cube, x, eps)[0] - exact);
    const double e2 = std::abs(numeric_gradient(cube, x, eps / 2)[0] - exact);
    CHECK(e1 / e2 >= 3.0);
    CHECK(e1 / e2 <= 5.0);
  }
}

TEST_CASE("numeric_gradient: invalid eps and non-finite values") {
  auto f = [](std::span<const double> t) { return t[0]; };
  const std::vector<double> x{1.0};
  CHECK_THROWS_AS(numeric_gradient(f, x, 0.0), ValueError);
  CHECK_THROWS_AS(numeric_gradient(f, x, -1e-6), ValueError);
  auto blow = [](std::span<const double> t) { return t[0] > 1.0 ? std::log(-1.0) : t[0]; };
  CHECK_THROWS_AS(numeric_gradient(blow, x, 1e-6), ValueError);
}

TEST_CASE("relative_error definition") {
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(2.0, 1.0) == 0.5);
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(1e-13, 0.0) == doctest::Approx(0.1));
}

TEST_CASE("check_module: conv2d passes on three seeds") {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto layer = make_block("conv2d", {1, 2, 5, 5}, R"({"out_channels":3,"kernel":3})", seed);
    const auto report = check_module(*layer, {1, 2, 5, 5}, seed);
    CHECK(report.status == GradCheckStatus::passed);
    CHECK(report.max_rel_error() < 1e-5);
    REQUIRE(report.groups.size() == 2);
    CHECK(report.groups[0].name == "input");
    CHECK(report.groups[1].name == "weight");
  }
}

TEST_CASE("check_module: a corrupted backward fails") {
  Rng rng(4);
  CorruptedConv layer(ConvParams::init(ConvSpec::same(2, 3, 3), rng));
  const auto report = check_module(layer, {1, 2, 5, 5}, 4);
  CHECK(report.status == GradCheckStatus::failed);
  CHECK(report.groups[1].max_rel_error > 0.1);
  CHECK(report.groups[1].worst_index == 3);
  CHECK(report.groups[0].max_rel_error < 1e-5);
}

TEST_CASE("check_module: hard gate is reported as unsupported, not passed") {
  auto layer = make_block("scconv", {1, 8, 4, 4}, R"({"gate":"hard"})", 1);
  const auto report = check_module(*layer, {1, 8, 4, 4}, 1);
  CHECK(report.status == GradCheckStatus::unsupported_mode);
  CHECK_FALSE(report.passed());
  CHECK(report.groups.empty());
  CHECK(to_json(report).find("\"unsupported-mode\"") != std::string::npos);
}

TEST_CASE("check_module leaves parameters unchanged") {
  auto layer = make_block("ghost_conv", {1, 4, 4, 4}, R"({"out_channels":4})", 5);
  Rng rng(5);
  const Tensor x = rng.tensor({1, 4, 4, 4});
  const Tensor before = layer->forward(x, nullptr);
  check_module(*layer, {1, 4, 4, 4}, 5);
  CHECK(layer->forward(x, nullptr) == before);
}

TEST_CASE("gradient suite: every differentiable block passes on three seeds") {
  for (const auto& c : suite::kGradCases) {
    for (std::uint64_t seed : suite::kSeeds) {
      CAPTURE(c.label);
      CAPTURE(seed);
      auto layer = make_block(c.kind, c.shape, c.params, seed);
      const auto report = check_module(*layer, c.shape, seed);
      CHECK(report.status == GradCheckStatus::passed);
      CHECK(report.max_rel_error() < 1e-5);
    }
  }
}

TEST_CASE("default CARAFE configuration: backward agrees in absolute terms") {
  // The relative criterion is ill-conditioned for near-zero encoder
  // gradients at k_up = 5; the absolute gap shows the VJP itself is right.
  for (std::uint64_t seed : suite::kSeeds) {
    for (std::string_view kind : {"carafe", "predict_kernels"}) {
      auto layer = make_block(kind, {1, 4, 4, 4}, "{}", seed);
      const auto report = check_module(*layer, {1, 4, 4, 4}, seed);
      for (const auto& g : report.groups) {
        CAPTURE(kind);
        CAPTURE(g.name);
        CHECK(g.max_abs_error < 1e-9);
      }
    }
  }
}
