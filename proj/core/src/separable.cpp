#include "lwconv/separable.hpp"

#include "lwconv/error.hpp"

namespace lwconv {

void SeparableConvParams::validate() const {
  const Shape& dw = depthwise.shape();
  const Shape& pw = pointwise.shape();
  if (dw.c != 1 || dw.h != dw.w) {
    throw ShapeError("ds_conv: depthwise weights must be (M,1,K,K), got " + dw.str());
  }
  if (dw.h % 2 == 0) {
    throw ValueError("ds_conv: kernel must be odd for same padding, got " + std::to_string(dw.h));
  }
  if (pw.c != dw.n || pw.h != 1 || pw.w != 1) {
    throw ShapeError("ds_conv: pointwise weights must be (N," + std::to_string(dw.n) +
                     ",1,1), got " + pw.str());
  }
}

ConvSpec SeparableConvParams::depthwise_spec() const {
  return ConvSpec::same(in_channels(), in_channels(), kernel(), in_channels());
}

ConvSpec SeparableConvParams::pointwise_spec() const {
  return ConvSpec::same(in_channels(), out_channels(), 1);
}

SeparableConvParams SeparableConvParams::init(std::int64_t in_channels, std::int64_t out_channels,
                                              std::int64_t kernel, Rng& rng) {
  SeparableConvParams p;
  p.depthwise = rng.kaiming_uniform({in_channels, 1, kernel, kernel}, kernel * kernel);
  p.pointwise = rng.kaiming_uniform({out_channels, in_channels, 1, 1}, in_channels);
  p.validate();
  return p;
}

Tensor ds_forward(const Tensor& x, const Tensor& depthwise, const Tensor& pointwise,
                  MacCounter* counter) {
  const SeparableConvParams p{depthwise, pointwise};
  p.validate();
  const Tensor mid = conv2d(x, depthwise, p.depthwise_spec(), counter);
  return conv2d(mid, pointwise, p.pointwise_spec(), counter);
}

SeparableConvGrads ds_backward(const Tensor& x, const SeparableConvParams& params,
                               const Tensor& grad_output) {
  params.validate();
  const ConvSpec dw_spec = params.depthwise_spec();
  const ConvSpec pw_spec = params.pointwise_spec();
  const Tensor mid = conv2d(x, params.depthwise, dw_spec);
  auto gp = conv2d_backward(mid, params.pointwise, pw_spec, grad_output);
  auto gd = conv2d_backward(x, params.depthwise, dw_spec, gp.input);
  return {std::move(gd.input), {std::move(gd.weight), std::move(gp.weight)}};
}

SeparableConvLayer::SeparableConvLayer(SeparableConvParams params) : params_(std::move(params)) {
  params_.validate();
}

Shape SeparableConvLayer::output_shape(const Shape& input) const {
  return params_.pointwise_spec().output_shape(params_.depthwise_spec().output_shape(input));
}

Tensor SeparableConvLayer::forward(const Tensor& x, MacCounter* counter) const {
  return ds_forward(x, params_.depthwise, params_.pointwise, counter);
}

LayerGrads SeparableConvLayer::backward(const Tensor& x, const Tensor& grad_output) const {
  auto g = ds_backward(x, params_, grad_output);
  return {std::move(g.input), detail::flatten_grads(g.params)};
}

}  // namespace lwconv
