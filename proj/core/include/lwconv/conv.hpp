#ifndef LWCONV_CONV_HPP
#define LWCONV_CONV_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "lwconv/tensor.hpp"

namespace lwconv {

// Multiply-accumulate tally filled in by instrumented forward passes. Every
// visited kernel tap counts once, including taps that fall on zero padding.
struct MacCounter {
  std::uint64_t macs = 0;
};

struct ConvSpec {
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  std::int64_t kernel = 1;
  std::int64_t stride = 1;
  std::int64_t padding = 0;
  std::int64_t groups = 1;
  bool has_bias = false;

  void validate() const;
  Shape weight_shape() const;
  // fan-in of one output unit: in_channels/groups * kernel^2
  std::int64_t fan_in() const noexcept { return in_channels / groups * kernel * kernel; }
  Shape output_shape(const Shape& input) const;

  // kernel x kernel, stride 1, padding (kernel-1)/2. Requires odd kernel.
  static ConvSpec same(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel,
                       std::int64_t groups = 1);
};

// Grouped 2-D cross-correlation with zero padding. `bias` must be empty or
// hold one entry per output channel.
Tensor conv2d(const Tensor& input, const Tensor& weight, std::span<const double> bias,
              const ConvSpec& spec, MacCounter* counter = nullptr);

inline Tensor conv2d(const Tensor& input, const Tensor& weight, const ConvSpec& spec,
                     MacCounter* counter = nullptr) {
  return conv2d(input, weight, {}, spec, counter);
}

struct Conv2dGrads {
  Tensor input;
  Tensor weight;
  std::vector<double> bias;  // empty unless spec.has_bias
};

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weight, const ConvSpec& spec,
                            const Tensor& grad_output);

}  // namespace lwconv

#endif  // LWCONV_CONV_HPP
