#ifndef LWCONV_GHOST_HPP
#define LWCONV_GHOST_HPP

#include <string>
#include <vector>

#include "lwconv/init.hpp"
#include "lwconv/layer.hpp"
#include "lwconv/layers.hpp"

namespace lwconv {

enum class Activation { none, sigmoid };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view text);

// GhostConv: a primary convolution yields N/s intrinsic maps, a cheap
// depthwise convolution derives the remaining N - N/s ghost maps from them,
// output = act(concat(intrinsic, ghost)). Stride 1, same padding.
struct GhostSpec {
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 2;
  std::int64_t ratio = 2;           // s
  std::int64_t primary_kernel = 1;  // odd
  std::int64_t cheap_kernel = 3;    // d, odd
  Activation activation = Activation::none;
  Tensor primary;  // (N/s, M, k, k)
  Tensor cheap;    // (N - N/s, 1, d, d), groups = N/s

  std::int64_t intrinsic_channels() const noexcept { return out_channels / ratio; }
  ConvSpec primary_spec() const;
  ConvSpec cheap_spec() const;
  // Hyperparameters only; used before weights exist.
  void validate_hyper() const;
  void validate() const;

  static GhostSpec init(std::int64_t in_channels, std::int64_t out_channels, Rng& rng,
                        std::int64_t primary_kernel = 1, std::int64_t ratio = 2,
                        std::int64_t cheap_kernel = 3, Activation activation = Activation::none);
};

template <class S, class F>
  requires std::same_as<std::remove_const_t<S>, GhostSpec>
void for_each_param(S& p, F&& f, const std::string& prefix) {
  f(prefix + "primary", p.primary);
  f(prefix + "cheap", p.cheap);
}

Tensor ghost_conv(const Tensor& x, const GhostSpec& spec, MacCounter* counter = nullptr);

struct GhostConvGrads {
  Tensor input;
  GhostSpec params;
};

GhostConvGrads ghost_conv_backward(const Tensor& x, const GhostSpec& spec,
                                   const Tensor& grad_output);

// Stride-1 residual bottleneck: x + project(expand(x)).
struct GhostBottleneckSpec {
  GhostSpec expand;   // C -> hidden
  GhostSpec project;  // hidden -> C

  std::int64_t channels() const noexcept { return expand.in_channels; }
  void validate() const;

  // hidden defaults to channels/2; 1x1 primaries, 3x3 cheap, s = 2.
  static GhostBottleneckSpec init(std::int64_t channels, Rng& rng, std::int64_t hidden = 0,
                                  Activation activation = Activation::none);
};

template <class S, class F>
  requires std::same_as<std::remove_const_t<S>, GhostBottleneckSpec>
void for_each_param(S& p, F&& f, const std::string& prefix) {
  for_each_param(p.expand, f, prefix + "expand.");
  for_each_param(p.project, f, prefix + "project.");
}

Tensor ghost_bottleneck(const Tensor& x, const GhostBottleneckSpec& spec,
                        MacCounter* counter = nullptr);

struct GhostBottleneckGrads {
  Tensor input;
  GhostBottleneckSpec params;
};

GhostBottleneckGrads ghost_bottleneck_backward(const Tensor& x, const GhostBottleneckSpec& spec,
                                               const Tensor& grad_output);

// Dual path: A = bottlenecks(cv1(x)), B = cv2(x), out = cv3(concat(A, B)).
struct C3GhostSpec {
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  std::int64_t hidden = 1;
  ConvParams cv1;  // 1x1, in -> hidden
  ConvParams cv2;  // 1x1, in -> hidden
  ConvParams cv3;  // 1x1, 2*hidden -> out
  std::vector<GhostBottleneckSpec> bottlenecks;

  void validate() const;

  // hidden defaults to out_channels/2.
  static C3GhostSpec init(std::int64_t in_channels, std::int64_t out_channels,
                          std::int64_t n_bottlenecks, Rng& rng, std::int64_t hidden = 0);
};

template <class S, class F>
  requires std::same_as<std::remove_const_t<S>, C3GhostSpec>
void for_each_param(S& p, F&& f, const std::string& prefix) {
  for_each_param(p.cv1, f, prefix + "cv1.");
  for_each_param(p.cv2, f, prefix + "cv2.");
  for (std::size_t i = 0; i < p.bottlenecks.size(); ++i) {
    for_each_param(p.bottlenecks[i], f, prefix + "m." + std::to_string(i) + ".");
  }
  for_each_param(p.cv3, f, prefix + "cv3.");
}

Tensor c3ghost(const Tensor& x, const C3GhostSpec& spec, MacCounter* counter = nullptr);

struct C3GhostGrads {
  Tensor input;
  C3GhostSpec params;
};

C3GhostGrads c3ghost_backward(const Tensor& x, const C3GhostSpec& spec, const Tensor& grad_output);

class GhostConvLayer final : public Layer {
 public:
  explicit GhostConvLayer(GhostSpec spec);

  std::string_view kind() const override { return "ghost_conv"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override { return detail::collect_params(spec_); }
  std::vector<ConstParamRef> parameters() const override { return detail::collect_params(spec_); }

 private:
  GhostSpec spec_;
};

class GhostBottleneckLayer final : public Layer {
 public:
  explicit GhostBottleneckLayer(GhostBottleneckSpec spec);

  std::string_view kind() const override { return "ghost_bottleneck"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override { return detail::collect_params(spec_); }
  std::vector<ConstParamRef> parameters() const override { return detail::collect_params(spec_); }

 private:
  GhostBottleneckSpec spec_;
};

class C3GhostLayer final : public Layer {
 public:
  explicit C3GhostLayer(C3GhostSpec spec);

  std::string_view kind() const override { return "c3ghost"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override { return detail::collect_params(spec_); }
  std::vector<ConstParamRef> parameters() const override { return detail::collect_params(spec_); }

 private:
  C3GhostSpec spec_;
};

}  // namespace lwconv

#endif  // LWCONV_GHOST_HPP
