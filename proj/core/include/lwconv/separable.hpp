#ifndef LWCONV_SEPARABLE_HPP
#define LWCONV_SEPARABLE_HPP

#include <string>

#include "lwconv/conv.hpp"
#include "lwconv/init.hpp"
#include "lwconv/layer.hpp"

namespace lwconv {

// Depthwise (M,1,K,K) followed by pointwise (N,M,1,1), stride 1, same padding.
struct SeparableConvParams {
  Tensor depthwise;
  Tensor pointwise;

  std::int64_t in_channels() const noexcept { return depthwise.n(); }
  std::int64_t out_channels() const noexcept { return pointwise.n(); }
  std::int64_t kernel() const noexcept { return depthwise.h(); }

  void validate() const;
  ConvSpec depthwise_spec() const;
  ConvSpec pointwise_spec() const;

  static SeparableConvParams init(std::int64_t in_channels, std::int64_t out_channels,
                                  std::int64_t kernel, Rng& rng);
};

template <class S, class F>
  requires std::same_as<std::remove_const_t<S>, SeparableConvParams>
void for_each_param(S& p, F&& f, const std::string& prefix) {
  f(prefix + "depthwise", p.depthwise);
  f(prefix + "pointwise", p.pointwise);
}

Tensor ds_forward(const Tensor& x, const Tensor& depthwise, const Tensor& pointwise,
                  MacCounter* counter = nullptr);

struct SeparableConvGrads {
  Tensor input;
  SeparableConvParams params;
};

SeparableConvGrads ds_backward(const Tensor& x, const SeparableConvParams& params,
                               const Tensor& grad_output);

class SeparableConvLayer final : public Layer {
 public:
  explicit SeparableConvLayer(SeparableConvParams params);

  std::string_view kind() const override { return "ds_conv"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override { return detail::collect_params(params_); }
  std::vector<ConstParamRef> parameters() const override { return detail::collect_params(params_); }

 private:
  SeparableConvParams params_;
};

}  // namespace lwconv

#endif  // LWCONV_SEPARABLE_HPP
