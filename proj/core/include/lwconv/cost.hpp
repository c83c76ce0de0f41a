#ifndef LWCONV_COST_HPP
#define LWCONV_COST_HPP

#include <cstdint>
#include <string>

namespace lwconv {

enum class ConvMode { standard, separable };

std::string_view to_string(ConvMode mode) noexcept;

struct CostInputs {
  std::int64_t kernel = 1;        // K
  std::int64_t in_channels = 1;   // M
  std::int64_t out_channels = 1;  // N
  std::int64_t height = 1;        // H
  std::int64_t width = 1;         // W
};

// Parameter and multiply-accumulate counts for a stride-1, same-padded
// convolution layer. Biases are not included.
//   standard:  params = K*K*M*N           macs = H*W*K*K*M*N
//   separable: params = K*K*M + M*N       macs = K*K*M*H*W + M*N*H*W
struct CostReport {
  ConvMode mode = ConvMode::standard;
  CostInputs inputs;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
};

// Throws ValueError on a dimension < 1 or on 64-bit overflow.
CostReport conv_cost(const CostInputs& inputs, ConvMode mode);
inline CostReport conv_cost(std::int64_t k, std::int64_t m, std::int64_t n, std::int64_t h,
                            std::int64_t w, ConvMode mode) {
  return conv_cost(CostInputs{k, m, n, h, w}, mode);
}

// Reduced fraction num/den.
struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  friend bool operator==(const Ratio&, const Ratio&) = default;
  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
};

Ratio make_ratio(std::uint64_t num, std::uint64_t den);

// separable/standard cost ratio, 1/N + 1/K^2, independent of M, H, W.
double cost_ratio(std::int64_t kernel, std::int64_t out_channels);
Ratio cost_ratio_exact(std::int64_t kernel, std::int64_t out_channels);

// {"mode":..., "K":..,"M":..,"N":..,"H":..,"W":.., "params":.., "macs":.., "mac_unit":...}
std::string to_json(const CostReport& report);

}  // namespace lwconv

#endif  // LWCONV_COST_HPP
