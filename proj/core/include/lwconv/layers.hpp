#ifndef LWCONV_LAYERS_HPP
#define LWCONV_LAYERS_HPP

#include <concepts>
#include <string>

#include "lwconv/conv.hpp"
#include "lwconv/init.hpp"
#include "lwconv/layer.hpp"
#include "lwconv/norm.hpp"

namespace lwconv {

// Convolution weights bundled with their hyperparameters.
struct ConvParams {
  ConvSpec spec;
  Tensor weight;
  std::vector<double> bias;

  static ConvParams init(const ConvSpec& spec, Rng& rng);
  Tensor forward(const Tensor& x, MacCounter* counter = nullptr) const {
    return conv2d(x, weight, bias, spec, counter);
  }
};

template <class S, class F>
  requires std::same_as<std::remove_const_t<S>, ConvParams>
void for_each_param(S& p, F&& f, const std::string& prefix) {
  f(prefix + "weight", p.weight);
  f(prefix + "bias", p.bias, ParamRole::bias);
}

template <class S, class F>
  requires std::same_as<std::remove_const_t<S>, GroupNormParams>
void for_each_param(S& p, F&& f, const std::string& prefix) {
  f(prefix + "gamma", p.gamma);
  f(prefix + "beta", p.beta);
}

class Conv2dLayer final : public Layer {
 public:
  explicit Conv2dLayer(ConvParams params);

  std::string_view kind() const override { return "conv2d"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override { return detail::collect_params(params_); }
  std::vector<ConstParamRef> parameters() const override { return detail::collect_params(params_); }

  const ConvParams& params() const noexcept { return params_; }

 private:
  ConvParams params_;
};

class GroupNormLayer final : public Layer {
 public:
  explicit GroupNormLayer(GroupNormParams params);

  std::string_view kind() const override { return "group_norm"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override { return detail::collect_params(params_); }
  std::vector<ConstParamRef> parameters() const override { return detail::collect_params(params_); }

 private:
  GroupNormParams params_;
};

class SoftmaxLayer final : public Layer {
 public:
  std::string_view kind() const override { return "softmax"; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override { return {}; }
  std::vector<ConstParamRef> parameters() const override { return {}; }
};

class GlobalAvgPoolLayer final : public Layer {
 public:
  std::string_view kind() const override { return "global_avg_pool"; }
  Shape output_shape(const Shape& input) const override { return {input.n, input.c, 1, 1}; }
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override { return {}; }
  std::vector<ConstParamRef> parameters() const override { return {}; }
};

class NearestUpsampleLayer final : public Layer {
 public:
  explicit NearestUpsampleLayer(std::int64_t factor);

  std::string_view kind() const override { return "nearest_upsample"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override { return {}; }
  std::vector<ConstParamRef> parameters() const override { return {}; }

 private:
  std::int64_t factor_;
};

}  // namespace lwconv

#endif  // LWCONV_LAYERS_HPP
