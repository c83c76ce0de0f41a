#include "lwconv/carafe.hpp"

#include <algorithm>

#include "lwconv/conv.hpp"
#include "lwconv/error.hpp"
#include "lwconv/ops.hpp"

namespace lwconv {
namespace {

void check_field(const Tensor& x, const KernelField& k, std::int64_t scale, std::int64_t k_up) {
  if (scale < 1) throw ValueError("reassemble: scale must be >= 1");
  if (k_up < 1 || k_up % 2 == 0) throw ValueError("reassemble: k_up must be odd and >= 1");
  const Shape want{x.n(), k_up * k_up, x.h() * scale, x.w() * scale};
  if (k.weights.shape() != want) {
    throw ShapeError("reassemble: kernel field shape " + k.weights.shape().str() + ", expected " +
                     want.str() + " for input " + x.shape().str());
  }
}

}  // namespace

ConvSpec CarafeParams::compressor_spec() const {
  return ConvSpec::same(channels(), mid_channels(), 1);
}

ConvSpec CarafeParams::encoder_spec() const {
  return ConvSpec::same(mid_channels(), scale * scale * taps(), k_enc);
}

void CarafeParams::validate_hyper() const {
  if (scale < 1) throw ValueError("carafe: scale must be >= 1");
  if (k_up < 1 || k_up % 2 == 0) throw ValueError("carafe: k_up must be odd and >= 1");
  if (k_enc < 1 || k_enc % 2 == 0) throw ValueError("carafe: k_enc must be odd and >= 1");
}

void CarafeParams::validate(std::int64_t channels) const {
  validate_hyper();
  if (compressor.c() != channels || compressor.h() != 1 || compressor.w() != 1) {
    throw ShapeError("carafe: compressor shape " + compressor.shape().str() + " does not map " +
                     std::to_string(channels) + " channels");
  }
  if (encoder.shape() != encoder_spec().weight_shape()) {
    throw ShapeError("carafe: encoder shape " + encoder.shape().str() + ", expected " +
                     encoder_spec().weight_shape().str());
  }
}

CarafeParams CarafeParams::init(std::int64_t channels, Rng& rng, std::int64_t scale,
                                std::int64_t k_up, std::int64_t k_enc, std::int64_t mid_channels) {
  if (channels < 1) throw ValueError("carafe: channels must be >= 1");
  if (mid_channels == 0) mid_channels = std::min<std::int64_t>(channels, 64);
  if (mid_channels < 1) throw ValueError("carafe: compressed channels must be >= 1");
  CarafeParams p;
  p.scale = scale;
  p.k_up = k_up;
  p.k_enc = k_enc;
  p.validate_hyper();
  p.compressor = rng.kaiming_uniform({mid_channels, channels, 1, 1}, channels);
  const ConvSpec enc = ConvSpec::same(mid_channels, scale * scale * k_up * k_up, k_enc);
  p.encoder = rng.kaiming_uniform(enc.weight_shape(), enc.fan_in());
  return p;
}

Tensor predict_kernel_logits(const Tensor& x, const CarafeParams& params, MacCounter* counter) {
  params.validate(x.c());
  const Tensor compressed = conv2d(x, params.compressor, params.compressor_spec(), counter);
  const Tensor encoded = conv2d(compressed, params.encoder, params.encoder_spec(), counter);
  return pixel_shuffle(encoded, params.scale);
}

KernelField predict_kernels(const Tensor& x, const CarafeParams& params, MacCounter* counter) {
  return {softmax_over_channels(predict_kernel_logits(x, params, counter))};
}

PredictKernelsGrads predict_kernels_backward(const Tensor& x, const CarafeParams& params,
                                             const Tensor& grad_kernels) {
  params.validate(x.c());
  const ConvSpec cs = params.compressor_spec();
  const ConvSpec es = params.encoder_spec();
  const Tensor compressed = conv2d(x, params.compressor, cs);
  const Tensor field = softmax_over_channels(pixel_shuffle(conv2d(compressed, params.encoder, es), params.scale));
  if (grad_kernels.shape() != field.shape()) {
    throw ShapeError("predict_kernels_backward: gradient shape " + grad_kernels.shape().str());
  }
  const Tensor d_logits = softmax_over_channels_backward(field, grad_kernels);
  auto ge = conv2d_backward(compressed, params.encoder, es, pixel_unshuffle(d_logits, params.scale));
  auto gc = conv2d_backward(x, params.compressor, cs, ge.input);
  PredictKernelsGrads g{std::move(gc.input), params};
  g.params.compressor = std::move(gc.weight);
  g.params.encoder = std::move(ge.weight);
  return g;
}

Tensor reassemble(const Tensor& x, const KernelField& kernels, std::int64_t scale,
                  std::int64_t k_up, MacCounter* counter) {
  check_field(x, kernels, scale, k_up);
  require_finite(x, "reassemble");
  const std::int64_t r = (k_up - 1) / 2;
  const Tensor& k = kernels.weights;
  Tensor out({x.n(), x.c(), x.h() * scale, x.w() * scale});
  std::uint64_t macs = 0;
  for (std::int64_t n = 0; n < x.n(); ++n)
    for (std::int64_t c = 0; c < x.c(); ++c)
      for (std::int64_t i = 0; i < out.h(); ++i)
        for (std::int64_t j = 0; j < out.w(); ++j) {
          const std::int64_t si = i / scale;
          const std::int64_t sj = j / scale;
          double acc = 0.0;
          for (std::int64_t a = 0; a < k_up; ++a) {
            const std::int64_t yi = si + a - r;
            for (std::int64_t b = 0; b < k_up; ++b) {
              ++macs;
              const std::int64_t xj = sj + b - r;
              if (yi < 0 || yi >= x.h() || xj < 0 || xj >= x.w()) continue;
              acc += k.at(n, a * k_up + b, i, j) * x.at(n, c, yi, xj);
            }
          }
          out.at(n, c, i, j) = acc;
        }
  if (counter != nullptr) counter->macs += macs;
  return out;
}

ReassembleGrads reassemble_backward(const Tensor& x, const KernelField& kernels,
                                    std::int64_t scale, std::int64_t k_up,
                                    const Tensor& grad_output) {
  check_field(x, kernels, scale, k_up);
  const Shape out_shape{x.n(), x.c(), x.h() * scale, x.w() * scale};
  if (grad_output.shape() != out_shape) {
    throw ShapeError("reassemble_backward: gradient shape " + grad_output.shape().str());
  }
  const std::int64_t r = (k_up - 1) / 2;
  const Tensor& k = kernels.weights;
  ReassembleGrads g{Tensor(x.shape()), Tensor(k.shape())};
  for (std::int64_t n = 0; n < x.n(); ++n)
    for (std::int64_t c = 0; c < x.c(); ++c)
      for (std::int64_t i = 0; i < out_shape.h; ++i)
        for (std::int64_t j = 0; j < out_shape.w; ++j) {
          const double go = grad_output.at(n, c, i, j);
          const std::int64_t si = i / scale;
          const std::int64_t sj = j / scale;
          for (std::int64_t a = 0; a < k_up; ++a) {
            const std::int64_t yi = si + a - r;
            if (yi < 0 || yi >= x.h()) continue;
            for (std::int64_t b = 0; b < k_up; ++b) {
              const std::int64_t xj = sj + b - r;
              if (xj < 0 || xj >= x.w()) continue;
              const std::int64_t t = a * k_up + b;
              g.input.at(n, c, yi, xj) += k.at(n, t, i, j) * go;
              g.kernels.at(n, t, i, j) += x.at(n, c, yi, xj) * go;
            }
          }
        }
  return g;
}

Tensor carafe_forward(const Tensor& x, const CarafeParams& params, MacCounter* counter) {
  const KernelField k = predict_kernels(x, params, counter);
  return reassemble(x, k, params.scale, params.k_up, counter);
}

CarafeGrads carafe_backward(const Tensor& x, const CarafeParams& params, const Tensor& grad_output) {
  const KernelField k = predict_kernels(x, params);
  auto gr = reassemble_backward(x, k, params.scale, params.k_up, grad_output);
  auto gp = predict_kernels_backward(x, params, gr.kernels);
  add_inplace(gr.input, gp.input);
  return {std::move(gr.input), std::move(gp.params)};
}

PredictKernelsLayer::PredictKernelsLayer(CarafeParams params) : params_(std::move(params)) {
  params_.validate(params_.channels());
}

Shape PredictKernelsLayer::output_shape(const Shape& input) const {
  params_.validate(input.c);
  return {input.n, params_.taps(), input.h * params_.scale, input.w * params_.scale};
}

Tensor PredictKernelsLayer::forward(const Tensor& x, MacCounter* counter) const {
  return predict_kernels(x, params_, counter).weights;
}

LayerGrads PredictKernelsLayer::backward(const Tensor& x, const Tensor& grad_output) const {
  auto g = predict_kernels_backward(x, params_, grad_output);
  return {std::move(g.input), detail::flatten_grads(g.params)};
}

ReassembleLayer::ReassembleLayer(KernelField kernels, std::int64_t scale, std::int64_t k_up)
    : kernels_(std::move(kernels)), scale_(scale), k_up_(k_up) {
  if (scale < 1 || k_up < 1 || k_up % 2 == 0) {
    throw ValueError("reassemble: need scale >= 1 and odd k_up");
  }
  if (kernels_.weights.c() != k_up * k_up || kernels_.weights.h() % scale != 0 ||
      kernels_.weights.w() % scale != 0) {
    throw ShapeError("reassemble: kernel field " + kernels_.weights.shape().str() +
                     " inconsistent with scale/k_up");
  }
}

Shape ReassembleLayer::output_shape(const Shape& input) const {
  const Shape want{input.n, k_up_ * k_up_, input.h * scale_, input.w * scale_};
  if (kernels_.weights.shape() != want) {
    throw ShapeError("reassemble: kernel field " + kernels_.weights.shape().str() +
                     " does not fit input " + input.str());
  }
  return {input.n, input.c, input.h * scale_, input.w * scale_};
}

Tensor ReassembleLayer::forward(const Tensor& x, MacCounter* counter) const {
  return reassemble(x, kernels_, scale_, k_up_, counter);
}

LayerGrads ReassembleLayer::backward(const Tensor& x, const Tensor& grad_output) const {
  auto g = reassemble_backward(x, kernels_, scale_, k_up_, grad_output);
  LayerGrads out{std::move(g.input), {}};
  out.params.emplace_back(g.kernels.data().begin(), g.kernels.data().end());
  return out;
}

std::vector<ParamRef> ReassembleLayer::parameters() {
  return {{"kernels", kernels_.weights.data(), kernels_.weights.shape(), ParamRole::weight}};
}

std::vector<ConstParamRef> ReassembleLayer::parameters() const {
  return {{"kernels", kernels_.weights.data(), kernels_.weights.shape(), ParamRole::weight}};
}

CarafeLayer::CarafeLayer(CarafeParams params) : params_(std::move(params)) {
  params_.validate(params_.channels());
}

Shape CarafeLayer::output_shape(const Shape& input) const {
  params_.validate(input.c);
  params_.encoder_spec().output_shape(params_.compressor_spec().output_shape(input));
  return {input.n, input.c, input.h * params_.scale, input.w * params_.scale};
}

Tensor CarafeLayer::forward(const Tensor& x, MacCounter* counter) const {
  return carafe_forward(x, params_, counter);
}

LayerGrads CarafeLayer::backward(const Tensor& x, const Tensor& grad_output) const {
  auto g = carafe_backward(x, params_, grad_output);
  return {std::move(g.input), detail::flatten_grads(g.params)};
}

}  // namespace lwconv
