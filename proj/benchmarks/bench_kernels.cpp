#include <benchmark/benchmark.h>

#include "lwconv/carafe.hpp"
#include "lwconv/conv.hpp"
#include "lwconv/ghost.hpp"
#include "lwconv/init.hpp"
#include "lwconv/layers.hpp"
#include "lwconv/ops.hpp"
#include "lwconv/scconv.hpp"
#include "lwconv/separable.hpp"

using namespace lwconv;

namespace {

// args: M = N channels, H = W spatial size
void BM_StandardConv3x3(benchmark::State& state) {
  const std::int64_t c = state.range(0), hw = state.range(1);
  Rng rng(1);
  const auto p = ConvParams::init(ConvSpec::same(c, c, 3), rng);
  const Tensor x = rng.tensor({1, c, hw, hw});
  for (auto _ : state) benchmark::DoNotOptimize(p.forward(x));
  state.counters["MACs"] = static_cast<double>(9 * c * c * hw * hw);
}

void BM_SeparableConv3x3(benchmark::State& state) {
  const std::int64_t c = state.range(0), hw = state.range(1);
  Rng rng(1);
  const auto p = SeparableConvParams::init(c, c, 3, rng);
  const Tensor x = rng.tensor({1, c, hw, hw});
  for (auto _ : state) benchmark::DoNotOptimize(ds_forward(x, p.depthwise, p.pointwise));
  state.counters["MACs"] = static_cast<double>(9 * c * hw * hw + c * c * hw * hw);
}

void BM_GhostConv(benchmark::State& state) {
  const std::int64_t c = state.range(0), hw = state.range(1);
  Rng rng(1);
  const auto spec = GhostSpec::init(c, c, rng, 3);
  const Tensor x = rng.tensor({1, c, hw, hw});
  for (auto _ : state) benchmark::DoNotOptimize(ghost_conv(x, spec));
}

void BM_Carafe(benchmark::State& state) {
  const std::int64_t c = state.range(0), hw = state.range(1);
  Rng rng(1);
  const auto p = CarafeParams::init(c, rng);
  const Tensor x = rng.tensor({1, c, hw, hw});
  for (auto _ : state) benchmark::DoNotOptimize(carafe_forward(x, p));
}

void BM_NearestUpsample(benchmark::State& state) {
  const std::int64_t c = state.range(0), hw = state.range(1);
  Rng rng(1);
  const Tensor x = rng.tensor({1, c, hw, hw});
  for (auto _ : state) benchmark::DoNotOptimize(nearest_upsample(x, 2));
}

void BM_SCConv(benchmark::State& state) {
  const std::int64_t c = state.range(0), hw = state.range(1);
  Rng rng(1);
  const auto sru = SruParams::init(c, GateMode::hard, rng);
  const auto cru = CruParams::init(c, 0.5, 2, 2, rng);
  const Tensor x = rng.tensor({1, c, hw, hw});
  for (auto _ : state) benchmark::DoNotOptimize(scconv_forward(x, sru, cru));
}

}  // namespace

BENCHMARK(BM_StandardConv3x3)->Args({32, 16})->Args({64, 32});
BENCHMARK(BM_SeparableConv3x3)->Args({32, 16})->Args({64, 32});
BENCHMARK(BM_GhostConv)->Args({32, 16})->Args({64, 32});
BENCHMARK(BM_Carafe)->Args({32, 16})->Args({64, 16});
BENCHMARK(BM_NearestUpsample)->Args({32, 16})->Args({64, 16});
BENCHMARK(BM_SCConv)->Args({32, 16})->Args({64, 32});

BENCHMARK_MAIN();
