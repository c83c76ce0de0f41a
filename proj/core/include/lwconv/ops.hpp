#ifndef LWCONV_OPS_HPP
#define LWCONV_OPS_HPP

#include <cstdint>
#include <span>
#include <utility>

#include "lwconv/tensor.hpp"

namespace lwconv {

// Elementwise helpers. Binary ops require identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor multiply(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// a*x + b*y
Tensor axpby(double a, const Tensor& x, double b, const Tensor& y);
void add_inplace(Tensor& acc, const Tensor& t);

Tensor sigmoid(const Tensor& x);
// Vector-Jacobian product of sigmoid given its forward output.
Tensor sigmoid_backward(const Tensor& output, const Tensor& grad_output);

// Channel bookkeeping. All inputs must agree on n, h, w.
Tensor concat_channels(std::span<const Tensor> parts);
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& t, std::int64_t begin, std::int64_t count);
// Splits into the first `first` channels and the remainder.
std::pair<Tensor, Tensor> split_channels(const Tensor& t, std::int64_t first);

// (n,c,h,w) -> (n,c,f*h,f*w), each source pixel replicated f x f.
Tensor nearest_upsample(const Tensor& x, std::int64_t factor);
Tensor nearest_upsample_backward(const Tensor& grad_output, std::int64_t factor);

// Channel-to-space rearrangement (n, f*f*c, h, w) -> (n, c, f*h, f*w).
// Block-major channel order: input channel (dy*f + dx)*c + k lands at
// output channel k, pixel (f*y + dy, f*x + dx).
Tensor pixel_shuffle(const Tensor& x, std::int64_t factor);
// Exact inverse of pixel_shuffle; also its vector-Jacobian product.
Tensor pixel_unshuffle(const Tensor& x, std::int64_t factor);

// Softmax across the channel axis at every (sample, row, col), computed
// with max subtraction.
Tensor softmax_over_channels(const Tensor& x);
Tensor softmax_over_channels_backward(const Tensor& output, const Tensor& grad_output);

// (n,c,h,w) -> (n,c,1,1) spatial mean.
Tensor global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const Shape& input_shape, const Tensor& grad_output);

}  // namespace lwconv

#endif  // LWCONV_OPS_HPP
