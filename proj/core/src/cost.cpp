#include "lwconv/cost.hpp"

#include <numeric>

#include "json.hpp"
#include "lwconv/error.hpp"

namespace lwconv {
namespace {

std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw ValueError("conv_cost: count overflows 64 bits");
  return r;
}

std::uint64_t add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) throw ValueError("conv_cost: count overflows 64 bits");
  return r;
}

std::uint64_t positive(std::int64_t v, const char* name) {
  if (v < 1) throw ValueError(std::string("conv_cost: ") + name + " must be >= 1");
  return static_cast<std::uint64_t>(v);
}

}  // namespace

std::string_view to_string(ConvMode mode) noexcept {
  return mode == ConvMode::standard ? "standard" : "separable";
}

CostReport conv_cost(const CostInputs& in, ConvMode mode) {
  const std::uint64_t k = positive(in.kernel, "K");
  const std::uint64_t m = positive(in.in_channels, "M");
  const std::uint64_t n = positive(in.out_channels, "N");
  const std::uint64_t hw = mul(positive(in.height, "H"), positive(in.width, "W"));
  const std::uint64_t kk = mul(k, k);

  CostReport r{mode, in, 0, 0};
  if (mode == ConvMode::standard) {
    r.params = mul(mul(kk, m), n);
    r.macs = mul(hw, r.params);
  } else {
    const std::uint64_t depthwise = mul(kk, m);
    const std::uint64_t pointwise = mul(m, n);
    r.params = add(depthwise, pointwise);
    r.macs = add(mul(depthwise, hw), mul(pointwise, hw));
  }
  return r;
}

Ratio make_ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw ValueError("ratio with zero denominator");
  const std::uint64_t g = std::gcd(num, den);
  return g == 0 ? Ratio{0, 1} : Ratio{num / g, den / g};
}

double cost_ratio(std::int64_t kernel, std::int64_t out_channels) {
  const double k = static_cast<double>(positive(kernel, "K"));
  const double n = static_cast<double>(positive(out_channels, "N"));
  return 1.0 / n + 1.0 / (k * k);
}

Ratio cost_ratio_exact(std::int64_t kernel, std::int64_t out_channels) {
  const std::uint64_t kk = mul(positive(kernel, "K"), positive(kernel, "K"));
  const std::uint64_t n = positive(out_channels, "N");
  // 1/N + 1/K^2 = (K^2 + N) / (N K^2)
  return make_ratio(add(kk, n), mul(n, kk));
}

std::string to_json(const CostReport& r) {
  const nlohmann::ordered_json j = {
      {"mode", to_string(r.mode)},       {"K", r.inputs.kernel},
      {"M", r.inputs.in_channels},       {"N", r.inputs.out_channels},
      {"H", r.inputs.height},            {"W", r.inputs.width},
      {"params", r.params},              {"macs", r.macs},
      {"mac_unit", "multiply-accumulate"}, {"bias_included", false}};
  return j.dump();
}

}  // namespace lwconv
