#ifndef LWCONV_CARAFE_HPP
#define LWCONV_CARAFE_HPP

#include <string>

#include "lwconv/init.hpp"
#include "lwconv/layer.hpp"

namespace lwconv {

// Content-aware upsampler. Kernel prediction: 1x1 compress C -> C_m,
// k_enc x k_enc encode C_m -> scale^2 * k_up^2, pixel-shuffle to
// (n, k_up^2, scale*H, scale*W), softmax over the k_up^2 taps. Reassembly:
// every target pixel is the kernel-weighted sum of the k_up x k_up
// neighbourhood around its source pixel, shared across channels.
struct CarafeParams {
  std::int64_t scale = 2;  // sigma
  std::int64_t k_up = 5;
  std::int64_t k_enc = 3;
  Tensor compressor;  // (C_m, C, 1, 1)
  Tensor encoder;     // (scale^2 * k_up^2, C_m, k_enc, k_enc)

  std::int64_t channels() const noexcept { return compressor.c(); }
  std::int64_t mid_channels() const noexcept { return compressor.n(); }
  std::int64_t taps() const noexcept { return k_up * k_up; }
  ConvSpec compressor_spec() const;
  ConvSpec encoder_spec() const;
  void validate_hyper() const;
  void validate(std::int64_t channels) const;

  // mid_channels = 0 selects min(C, 64).
  static CarafeParams init(std::int64_t channels, Rng& rng, std::int64_t scale = 2,
                           std::int64_t k_up = 5, std::int64_t k_enc = 3,
                           std::int64_t mid_channels = 0);
};

template <class S, class F>
  requires std::same_as<std::remove_const_t<S>, CarafeParams>
void for_each_param(S& p, F&& f, const std::string& prefix) {
  f(prefix + "compressor", p.compressor);
  f(prefix + "encoder", p.encoder);
}

// (n, k_up^2, scale*H, scale*W); tap t = a*k_up + b addresses source offset
// (a - r, b - r), r = (k_up - 1)/2.
struct KernelField {
  Tensor weights;
};

// Logits after pixel shuffle, before the per-location softmax.
Tensor predict_kernel_logits(const Tensor& x, const CarafeParams& params,
                             MacCounter* counter = nullptr);
KernelField predict_kernels(const Tensor& x, const CarafeParams& params,
                            MacCounter* counter = nullptr);

struct PredictKernelsGrads {
  Tensor input;
  CarafeParams params;
};

PredictKernelsGrads predict_kernels_backward(const Tensor& x, const CarafeParams& params,
                                             const Tensor& grad_kernels);

// Throws ShapeError unless kernels is (n, k_up^2, scale*H, scale*W).
Tensor reassemble(const Tensor& x, const KernelField& kernels, std::int64_t scale,
                  std::int64_t k_up, MacCounter* counter = nullptr);

struct ReassembleGrads {
  Tensor input;
  Tensor kernels;
};

ReassembleGrads reassemble_backward(const Tensor& x, const KernelField& kernels,
                                    std::int64_t scale, std::int64_t k_up,
                                    const Tensor& grad_output);

Tensor carafe_forward(const Tensor& x, const CarafeParams& params, MacCounter* counter = nullptr);

struct CarafeGrads {
  Tensor input;
  CarafeParams params;
};

CarafeGrads carafe_backward(const Tensor& x, const CarafeParams& params, const Tensor& grad_output);

class PredictKernelsLayer final : public Layer {
 public:
  explicit PredictKernelsLayer(CarafeParams params);

  std::string_view kind() const override { return "predict_kernels"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override { return detail::collect_params(params_); }
  std::vector<ConstParamRef> parameters() const override { return detail::collect_params(params_); }

 private:
  CarafeParams params_;
};

// Reassembly with a fixed kernel field treated as the parameter group
// "kernels".
class ReassembleLayer final : public Layer {
 public:
  ReassembleLayer(KernelField kernels, std::int64_t scale, std::int64_t k_up);

  std::string_view kind() const override { return "reassemble"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override;
  std::vector<ConstParamRef> parameters() const override;

 private:
  KernelField kernels_;
  std::int64_t scale_;
  std::int64_t k_up_;
};

class CarafeLayer final : public Layer {
 public:
  explicit CarafeLayer(CarafeParams params);

  std::string_view kind() const override { return "carafe"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override { return detail::collect_params(params_); }
  std::vector<ConstParamRef> parameters() const override { return detail::collect_params(params_); }

 private:
  CarafeParams params_;
};

}  // namespace lwconv

#endif  // LWCONV_CARAFE_HPP
