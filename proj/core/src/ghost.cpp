#include "lwconv/ghost.hpp"

#include "lwconv/error.hpp"
#include "lwconv/ops.hpp"

namespace lwconv {

std::string_view to_string(Activation a) noexcept {
  return a == Activation::none ? "none" : "sigmoid";
}

Activation parse_activation(std::string_view text) {
  if (text == "none") return Activation::none;
  if (text == "sigmoid") return Activation::sigmoid;
  throw ValueError("activation must be \"none\" or \"sigmoid\", got \"" + std::string(text) + "\"");
}

// ---------------------------------------------------------------------------
// GhostConv
// ---------------------------------------------------------------------------

void GhostSpec::validate_hyper() const {
  if (in_channels < 1 || out_channels < 1) throw ValueError("ghost_conv: channels must be >= 1");
  if (ratio < 2) throw ValueError("ghost_conv: ratio s must be >= 2");
  if (out_channels % ratio != 0) {
    throw ShapeError("ghost_conv: out_channels " + std::to_string(out_channels) +
                     " not divisible by ratio " + std::to_string(ratio));
  }
  for (std::int64_t k : {primary_kernel, cheap_kernel}) {
    if (k < 1 || k % 2 == 0) throw ValueError("ghost_conv: kernels must be odd and >= 1");
  }
}

ConvSpec GhostSpec::primary_spec() const {
  return ConvSpec::same(in_channels, intrinsic_channels(), primary_kernel);
}

ConvSpec GhostSpec::cheap_spec() const {
  const std::int64_t m = intrinsic_channels();
  return ConvSpec::same(m, out_channels - m, cheap_kernel, m);
}

void GhostSpec::validate() const {
  validate_hyper();
  if (primary.shape() != primary_spec().weight_shape() ||
      cheap.shape() != cheap_spec().weight_shape()) {
    throw ShapeError("ghost_conv: weight shapes " + primary.shape().str() + " / " +
                     cheap.shape().str() + " do not match the hyperparameters");
  }
}

GhostSpec GhostSpec::init(std::int64_t in_channels, std::int64_t out_channels, Rng& rng,
                          std::int64_t primary_kernel, std::int64_t ratio,
                          std::int64_t cheap_kernel, Activation activation) {
  GhostSpec s{in_channels, out_channels, ratio, primary_kernel, cheap_kernel, activation, {}, {}};
  s.validate_hyper();
  const ConvSpec p = s.primary_spec();
  const ConvSpec c = s.cheap_spec();
  s.primary = rng.kaiming_uniform(p.weight_shape(), p.fan_in());
  s.cheap = rng.kaiming_uniform(c.weight_shape(), c.fan_in());
  return s;
}

Tensor ghost_conv(const Tensor& x, const GhostSpec& spec, MacCounter* counter) {
  spec.validate();
  const Tensor intrinsic = conv2d(x, spec.primary, spec.primary_spec(), counter);
  const Tensor ghost = conv2d(intrinsic, spec.cheap, spec.cheap_spec(), counter);
  Tensor out = concat_channels(intrinsic, ghost);
  return spec.activation == Activation::sigmoid ? sigmoid(out) : out;
}

GhostConvGrads ghost_conv_backward(const Tensor& x, const GhostSpec& spec,
                                   const Tensor& grad_output) {
  spec.validate();
  const ConvSpec ps = spec.primary_spec();
  const ConvSpec cs = spec.cheap_spec();
  const Tensor intrinsic = conv2d(x, spec.primary, ps);
  Tensor d_cat = grad_output;
  if (spec.activation == Activation::sigmoid) {
    const Tensor ghost = conv2d(intrinsic, spec.cheap, cs);
    d_cat = sigmoid_backward(sigmoid(concat_channels(intrinsic, ghost)), grad_output);
  }
  auto [d_intrinsic, d_ghost] = split_channels(d_cat, spec.intrinsic_channels());
  auto gc = conv2d_backward(intrinsic, spec.cheap, cs, d_ghost);
  add_inplace(d_intrinsic, gc.input);
  auto gp = conv2d_backward(x, spec.primary, ps, d_intrinsic);
  GhostConvGrads g{std::move(gp.input), spec};
  g.params.primary = std::move(gp.weight);
  g.params.cheap = std::move(gc.weight);
  return g;
}

// ---------------------------------------------------------------------------
// GhostBottleneck
// ---------------------------------------------------------------------------

void GhostBottleneckSpec::validate() const {
  expand.validate();
  project.validate();
  if (project.out_channels != expand.in_channels || project.in_channels != expand.out_channels) {
    throw ShapeError("ghost_bottleneck: residual needs project(expand(x)) to keep " +
                     std::to_string(expand.in_channels) + " channels");
  }
}

GhostBottleneckSpec GhostBottleneckSpec::init(std::int64_t channels, Rng& rng, std::int64_t hidden,
                                              Activation activation) {
  if (hidden == 0) hidden = channels / 2;
  if (hidden < 1) throw ValueError("ghost_bottleneck: hidden width must be >= 1");
  GhostBottleneckSpec s;
  s.expand = GhostSpec::init(channels, hidden, rng, 1, 2, 3, activation);
  s.project = GhostSpec::init(hidden, channels, rng, 1, 2, 3, Activation::none);
  return s;
}

Tensor ghost_bottleneck(const Tensor& x, const GhostBottleneckSpec& spec, MacCounter* counter) {
  spec.validate();
  if (x.c() != spec.channels()) {
    throw ShapeError("ghost_bottleneck: input has " + std::to_string(x.c()) + " channels, expected " +
                     std::to_string(spec.channels()));
  }
  return add(x, ghost_conv(ghost_conv(x, spec.expand, counter), spec.project, counter));
}

GhostBottleneckGrads ghost_bottleneck_backward(const Tensor& x, const GhostBottleneckSpec& spec,
                                               const Tensor& grad_output) {
  spec.validate();
  const Tensor mid = ghost_conv(x, spec.expand);
  auto gp = ghost_conv_backward(mid, spec.project, grad_output);
  auto ge = ghost_conv_backward(x, spec.expand, gp.input);
  GhostBottleneckGrads g{add(grad_output, ge.input), {std::move(ge.params), std::move(gp.params)}};
  return g;
}

// ---------------------------------------------------------------------------
// C3Ghost
// ---------------------------------------------------------------------------

void C3GhostSpec::validate() const {
  if (in_channels < 1 || out_channels < 1 || hidden < 1) {
    throw ValueError("c3ghost: channel widths must be >= 1");
  }
  auto check_conv = [](const ConvParams& p, std::int64_t in, std::int64_t out, const char* name) {
    const ConvSpec& s = p.spec;
    if (s.in_channels != in || s.out_channels != out || s.kernel != 1 || s.groups != 1 ||
        p.weight.shape() != s.weight_shape()) {
      throw ShapeError(std::string("c3ghost: ") + name + " must be a 1x1 conv " +
                       std::to_string(in) + " -> " + std::to_string(out));
    }
  };
  check_conv(cv1, in_channels, hidden, "cv1");
  check_conv(cv2, in_channels, hidden, "cv2");
  check_conv(cv3, 2 * hidden, out_channels, "cv3");
  for (const auto& b : bottlenecks) {
    b.validate();
    if (b.channels() != hidden) throw ShapeError("c3ghost: bottleneck width differs from hidden");
  }
}

C3GhostSpec C3GhostSpec::init(std::int64_t in_channels, std::int64_t out_channels,
                              std::int64_t n_bottlenecks, Rng& rng, std::int64_t hidden) {
  if (hidden == 0) hidden = out_channels / 2;
  if (hidden < 1) throw ValueError("c3ghost: hidden width must be >= 1");
  if (n_bottlenecks < 0) throw ValueError("c3ghost: bottleneck count must be >= 0");
  C3GhostSpec s;
  s.in_channels = in_channels;
  s.out_channels = out_channels;
  s.hidden = hidden;
  s.cv1 = ConvParams::init(ConvSpec::same(in_channels, hidden, 1), rng);
  s.cv2 = ConvParams::init(ConvSpec::same(in_channels, hidden, 1), rng);
  for (std::int64_t i = 0; i < n_bottlenecks; ++i) {
    s.bottlenecks.push_back(GhostBottleneckSpec::init(hidden, rng));
  }
  s.cv3 = ConvParams::init(ConvSpec::same(2 * hidden, out_channels, 1), rng);
  return s;
}

Tensor c3ghost(const Tensor& x, const C3GhostSpec& spec, MacCounter* counter) {
  spec.validate();
  Tensor a = spec.cv1.forward(x, counter);
  for (const auto& b : spec.bottlenecks) a = ghost_bottleneck(a, b, counter);
  const Tensor b = spec.cv2.forward(x, counter);
  return spec.cv3.forward(concat_channels(a, b), counter);
}

C3GhostGrads c3ghost_backward(const Tensor& x, const C3GhostSpec& spec, const Tensor& grad_output) {
  spec.validate();
  // forward, keeping every bottleneck input
  std::vector<Tensor> chain{spec.cv1.forward(x)};
  for (const auto& b : spec.bottlenecks) chain.push_back(ghost_bottleneck(chain.back(), b));
  const Tensor path_b = spec.cv2.forward(x);
  const Tensor cat = concat_channels(chain.back(), path_b);

  C3GhostGrads g{Tensor(x.shape()), spec};
  auto g3 = conv2d_backward(cat, spec.cv3.weight, spec.cv3.spec, grad_output);
  g.params.cv3.weight = std::move(g3.weight);
  g.params.cv3.bias = std::move(g3.bias);
  auto [d_a, d_b] = split_channels(g3.input, spec.hidden);

  for (std::size_t i = spec.bottlenecks.size(); i-- > 0;) {
    auto gb = ghost_bottleneck_backward(chain[i], spec.bottlenecks[i], d_a);
    d_a = std::move(gb.input);
    g.params.bottlenecks[i] = std::move(gb.params);
  }
  auto g1 = conv2d_backward(x, spec.cv1.weight, spec.cv1.spec, d_a);
  auto g2 = conv2d_backward(x, spec.cv2.weight, spec.cv2.spec, d_b);
  g.params.cv1.weight = std::move(g1.weight);
  g.params.cv1.bias = std::move(g1.bias);
  g.params.cv2.weight = std::move(g2.weight);
  g.params.cv2.bias = std::move(g2.bias);
  g.input = add(g1.input, g2.input);
  return g;
}

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

GhostConvLayer::GhostConvLayer(GhostSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

Shape GhostConvLayer::output_shape(const Shape& input) const {
  const Shape intrinsic = spec_.primary_spec().output_shape(input);
  const Shape ghost = spec_.cheap_spec().output_shape(intrinsic);
  return {input.n, intrinsic.c + ghost.c, intrinsic.h, intrinsic.w};
}

Tensor GhostConvLayer::forward(const Tensor& x, MacCounter* counter) const {
  return ghost_conv(x, spec_, counter);
}

LayerGrads GhostConvLayer::backward(const Tensor& x, const Tensor& grad_output) const {
  auto g = ghost_conv_backward(x, spec_, grad_output);
  return {std::move(g.input), detail::flatten_grads(g.params)};
}

GhostBottleneckLayer::GhostBottleneckLayer(GhostBottleneckSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
}

Shape GhostBottleneckLayer::output_shape(const Shape& input) const {
  if (input.c != spec_.channels()) {
    throw ShapeError("ghost_bottleneck: input has " + std::to_string(input.c) +
                     " channels, expected " + std::to_string(spec_.channels()));
  }
  return input;
}

Tensor GhostBottleneckLayer::forward(const Tensor& x, MacCounter* counter) const {
  return ghost_bottleneck(x, spec_, counter);
}

LayerGrads GhostBottleneckLayer::backward(const Tensor& x, const Tensor& grad_output) const {
  auto g = ghost_bottleneck_backward(x, spec_, grad_output);
  return {std::move(g.input), detail::flatten_grads(g.params)};
}

C3GhostLayer::C3GhostLayer(C3GhostSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

Shape C3GhostLayer::output_shape(const Shape& input) const {
  if (input.c != spec_.in_channels) {
    throw ShapeError("c3ghost: input has " + std::to_string(input.c) + " channels, expected " +
                     std::to_string(spec_.in_channels));
  }
  return {input.n, spec_.out_channels, input.h, input.w};
}

Tensor C3GhostLayer::forward(const Tensor& x, MacCounter* counter) const {
  return c3ghost(x, spec_, counter);
}

LayerGrads C3GhostLayer::backward(const Tensor& x, const Tensor& grad_output) const {
  auto g = c3ghost_backward(x, spec_, grad_output);
  return {std::move(g.input), detail::flatten_grads(g.params)};
}

}  // namespace lwconv
