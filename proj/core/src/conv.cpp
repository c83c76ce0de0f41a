#include "lwconv/conv.hpp"

#include <string>

#include "lwconv/error.hpp"

namespace lwconv {
namespace {

std::string describe(const ConvSpec& s) {
  return "conv2d(M=" + std::to_string(s.in_channels) + ", N=" + std::to_string(s.out_channels) +
         ", K=" + std::to_string(s.kernel) + ", g=" + std::to_string(s.groups) + ")";
}

void check_operands(const Tensor& input, const Tensor& weight, std::span<const double> bias,
                    const ConvSpec& spec) {
  spec.validate();
  if (input.c() != spec.in_channels) {
    throw ShapeError(describe(spec) + ": input has " + std::to_string(input.c()) + " channels");
  }
  if (weight.shape() != spec.weight_shape()) {
    throw ShapeError(describe(spec) + ": weight shape " + weight.shape().str() + ", expected " +
                     spec.weight_shape().str());
  }
  if (!bias.empty() && static_cast<std::int64_t>(bias.size()) != spec.out_channels) {
    throw ShapeError(describe(spec) + ": bias has " + std::to_string(bias.size()) + " entries");
  }
  if (spec.has_bias && bias.empty()) {
    throw ShapeError(describe(spec) + ": spec declares a bias but none was given");
  }
}

template <bool kCount>
void conv_forward(const Tensor& input, const Tensor& weight, std::span<const double> bias,
                  const ConvSpec& spec, Tensor& out, std::uint64_t& macs) {
  const std::int64_t cin_g = spec.in_channels / spec.groups;
  const std::int64_t cout_g = spec.out_channels / spec.groups;
  const std::int64_t k = spec.kernel;
  const std::int64_t h = input.h();
  const std::int64_t w = input.w();
  const auto x = input.data();
  const auto wt = weight.data();
  auto y = out.data();
  std::size_t yi = 0;
  for (std::int64_t n = 0; n < out.n(); ++n) {
    for (std::int64_t oc = 0; oc < spec.out_channels; ++oc) {
      const std::int64_t ic0 = (oc / cout_g) * cin_g;
      const double b = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(oc)];
      for (std::int64_t oh = 0; oh < out.h(); ++oh) {
        for (std::int64_t ow = 0; ow < out.w(); ++ow, ++yi) {
          double acc = b;
          for (std::int64_t icl = 0; icl < cin_g; ++icl) {
            const std::size_t wbase = static_cast<std::size_t>((oc * cin_g + icl) * k * k);
            const std::size_t xbase = input.offset(n, ic0 + icl, 0, 0);
            for (std::int64_t kh = 0; kh < k; ++kh) {
              const std::int64_t ih = oh * spec.stride - spec.padding + kh;
              for (std::int64_t kw = 0; kw < k; ++kw) {
                if constexpr (kCount) ++macs;
                const std::int64_t iw = ow * spec.stride - spec.padding + kw;
                if (ih < 0 || ih >= h || iw < 0 || iw >= w) continue;
                acc += wt[wbase + static_cast<std::size_t>(kh * k + kw)] *
                       x[xbase + static_cast<std::size_t>(ih * w + iw)];
              }
            }
          }
          y[yi] = acc;
        }
      }
    }
  }
}

}  // namespace

void ConvSpec::validate() const {
  if (in_channels < 1 || out_channels < 1) {
    throw ValueError(describe(*this) + ": channel counts must be >= 1");
  }
  if (kernel < 1 || stride < 1 || padding < 0) {
    throw ValueError(describe(*this) + ": need kernel >= 1, stride >= 1, padding >= 0");
  }
  if (groups < 1 || in_channels % groups != 0 || out_channels % groups != 0) {
    throw ShapeError(describe(*this) + ": channels not divisible by groups");
  }
}

Shape ConvSpec::weight_shape() const {
  return {out_channels, in_channels / groups, kernel, kernel};
}

Shape ConvSpec::output_shape(const Shape& input) const {
  validate();
  if (input.c != in_channels) {
    throw ShapeError(describe(*this) + ": input has " + std::to_string(input.c) + " channels");
  }
  const std::int64_t oh = (input.h + 2 * padding - kernel) / stride + 1;
  const std::int64_t ow = (input.w + 2 * padding - kernel) / stride + 1;
  if (input.h + 2 * padding < kernel || input.w + 2 * padding < kernel || oh < 1 || ow < 1) {
    throw ShapeError(describe(*this) + ": non-positive output size for input " + input.str());
  }
  return {input.n, out_channels, oh, ow};
}

ConvSpec ConvSpec::same(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel,
                        std::int64_t groups) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw ValueError("same-padded convolution needs an odd kernel, got " +
                     std::to_string(kernel));
  }
  return {in_channels, out_channels, kernel, 1, (kernel - 1) / 2, groups, false};
}

Tensor conv2d(const Tensor& input, const Tensor& weight, std::span<const double> bias,
              const ConvSpec& spec, MacCounter* counter) {
  check_operands(input, weight, bias, spec);
  require_finite(input, "conv2d");
  Tensor out(spec.output_shape(input.shape()));
  std::uint64_t macs = 0;
  if (counter != nullptr) {
    conv_forward<true>(input, weight, bias, spec, out, macs);
    counter->macs += macs;
  } else {
    conv_forward<false>(input, weight, bias, spec, out, macs);
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weight, const ConvSpec& spec,
                            const Tensor& grad_output) {
  check_operands(input, weight, {}, ConvSpec{spec.in_channels, spec.out_channels, spec.kernel,
                                             spec.stride, spec.padding, spec.groups, false});
  const Shape out_shape = spec.output_shape(input.shape());
  if (grad_output.shape() != out_shape) {
    throw ShapeError("conv2d_backward: grad_output shape " + grad_output.shape().str() +
                     ", expected " + out_shape.str());
  }
  Conv2dGrads g{Tensor(input.shape()), Tensor(weight.shape()), {}};
  if (spec.has_bias) g.bias.assign(static_cast<std::size_t>(spec.out_channels), 0.0);

  const std::int64_t cin_g = spec.in_channels / spec.groups;
  const std::int64_t cout_g = spec.out_channels / spec.groups;
  const std::int64_t k = spec.kernel;
  const std::int64_t h = input.h();
  const std::int64_t w = input.w();
  const auto x = input.data();
  const auto wt = weight.data();
  const auto gy = grad_output.data();
  auto gx = g.input.data();
  auto gw = g.weight.data();
  std::size_t yi = 0;
  for (std::int64_t n = 0; n < out_shape.n; ++n) {
    for (std::int64_t oc = 0; oc < spec.out_channels; ++oc) {
      const std::int64_t ic0 = (oc / cout_g) * cin_g;
      for (std::int64_t oh = 0; oh < out_shape.h; ++oh) {
        for (std::int64_t ow = 0; ow < out_shape.w; ++ow, ++yi) {
          const double go = gy[yi];
          if (spec.has_bias) g.bias[static_cast<std::size_t>(oc)] += go;
          for (std::int64_t icl = 0; icl < cin_g; ++icl) {
            const std::size_t wbase = static_cast<std::size_t>((oc * cin_g + icl) * k * k);
            const std::size_t xbase = input.offset(n, ic0 + icl, 0, 0);
            for (std::int64_t kh = 0; kh < k; ++kh) {
              const std::int64_t ih = oh * spec.stride - spec.padding + kh;
              if (ih < 0 || ih >= h) continue;
              for (std::int64_t kw = 0; kw < k; ++kw) {
                const std::int64_t iw = ow * spec.stride - spec.padding + kw;
                if (iw < 0 || iw >= w) continue;
                const std::size_t wi = wbase + static_cast<std::size_t>(kh * k + kw);
                const std::size_t xi = xbase + static_cast<std::size_t>(ih * w + iw);
                gx[xi] += wt[wi] * go;
                gw[wi] += x[xi] * go;
              }
            }
          }
        }
      }
    }
  }
  return g;
}

}  // namespace lwconv
