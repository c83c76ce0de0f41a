#include "lwconv/layers.hpp"

#include "lwconv/error.hpp"
#include "lwconv/ops.hpp"

namespace lwconv {

ParamCount count_parameters(const Layer& layer) {
  ParamCount count;
  for (const auto& p : layer.parameters()) {
    (p.role == ParamRole::bias ? count.bias : count.weights) += p.values.size();
  }
  return count;
}

ConvParams ConvParams::init(const ConvSpec& spec, Rng& rng) {
  spec.validate();
  ConvParams p{spec, rng.kaiming_uniform(spec.weight_shape(), spec.fan_in()), {}};
  if (spec.has_bias) {
    const Tensor b = rng.kaiming_uniform({1, spec.out_channels, 1, 1}, spec.fan_in());
    p.bias.assign(b.data().begin(), b.data().end());
  }
  return p;
}

Conv2dLayer::Conv2dLayer(ConvParams params) : params_(std::move(params)) {
  params_.spec.validate();
  if (params_.weight.shape() != params_.spec.weight_shape()) {
    throw ShapeError("conv2d layer: weight shape " + params_.weight.shape().str() +
                     " does not match spec " + params_.spec.weight_shape().str());
  }
}

Shape Conv2dLayer::output_shape(const Shape& input) const {
  return params_.spec.output_shape(input);
}

Tensor Conv2dLayer::forward(const Tensor& x, MacCounter* counter) const {
  return params_.forward(x, counter);
}

LayerGrads Conv2dLayer::backward(const Tensor& x, const Tensor& grad_output) const {
  auto g = conv2d_backward(x, params_.weight, params_.spec, grad_output);
  LayerGrads out{std::move(g.input), {}};
  out.params.emplace_back(g.weight.data().begin(), g.weight.data().end());
  if (params_.spec.has_bias) out.params.push_back(std::move(g.bias));
  return out;
}

GroupNormLayer::GroupNormLayer(GroupNormParams params) : params_(std::move(params)) {
  params_.validate(params_.channels());
}

Shape GroupNormLayer::output_shape(const Shape& input) const {
  params_.validate(input.c);
  return input;
}

Tensor GroupNormLayer::forward(const Tensor& x, MacCounter*) const {
  return group_norm(x, params_);
}

LayerGrads GroupNormLayer::backward(const Tensor& x, const Tensor& grad_output) const {
  auto g = group_norm_backward(x, params_, grad_output);
  return {std::move(g.input), {std::move(g.gamma), std::move(g.beta)}};
}

Tensor SoftmaxLayer::forward(const Tensor& x, MacCounter*) const {
  return softmax_over_channels(x);
}

LayerGrads SoftmaxLayer::backward(const Tensor& x, const Tensor& grad_output) const {
  return {softmax_over_channels_backward(softmax_over_channels(x), grad_output), {}};
}

Tensor GlobalAvgPoolLayer::forward(const Tensor& x, MacCounter*) const {
  return global_avg_pool(x);
}

LayerGrads GlobalAvgPoolLayer::backward(const Tensor& x, const Tensor& grad_output) const {
  return {global_avg_pool_backward(x.shape(), grad_output), {}};
}

NearestUpsampleLayer::NearestUpsampleLayer(std::int64_t factor) : factor_(factor) {
  if (factor < 1) throw ValueError("nearest_upsample: factor must be >= 1");
}

Shape NearestUpsampleLayer::output_shape(const Shape& input) const {
  return {input.n, input.c, input.h * factor_, input.w * factor_};
}

Tensor NearestUpsampleLayer::forward(const Tensor& x, MacCounter*) const {
  return nearest_upsample(x, factor_);
}

LayerGrads NearestUpsampleLayer::backward(const Tensor&, const Tensor& grad_output) const {
  return {nearest_upsample_backward(grad_output, factor_), {}};
}

}  // namespace lwconv
