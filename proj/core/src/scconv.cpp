#include "lwconv/scconv.hpp"

#include <cmath>
#include <numeric>
#include <tuple>

#include "lwconv/conv.hpp"
#include "lwconv/error.hpp"
#include "lwconv/ops.hpp"

namespace lwconv {
namespace {

// concat(second half, first half)
Tensor swap_halves(const Tensor& t) {
  auto [a, b] = split_channels(t, t.c() / 2);
  return concat_channels(b, a);
}

// Multiplies every element of channel c by v[c].
Tensor scale_channels(const Tensor& t, const std::vector<double>& v) {
  Tensor out = t;
  for (std::int64_t n = 0; n < t.n(); ++n)
    for (std::int64_t c = 0; c < t.c(); ++c)
      for (double& x : out.plane(n, c)) x *= v[static_cast<std::size_t>(c)];
  return out;
}

ConvSpec pointwise(std::int64_t in, std::int64_t out) { return ConvSpec::same(in, out, 1); }

}  // namespace

std::string_view to_string(GateMode mode) noexcept {
  return mode == GateMode::hard ? "hard" : "soft";
}

GateMode parse_gate_mode(std::string_view text) {
  if (text == "hard") return GateMode::hard;
  if (text == "soft") return GateMode::soft;
  throw ValueError("gate mode must be \"hard\" or \"soft\", got \"" + std::string(text) + "\"");
}

// ---------------------------------------------------------------------------
// SRU
// ---------------------------------------------------------------------------

void SruParams::validate(std::int64_t channels) const {
  gn.validate(channels);
  if (channels % 2 != 0) {
    throw ShapeError("sru: channel count must be even for the half-split, got " +
                     std::to_string(channels));
  }
  double total = 0.0;
  for (double g : gn.gamma) {
    if (!(g >= 0.0)) throw ValueError("sru: gamma entries must be non-negative");
    total += g;
  }
  if (!(total > 0.0)) throw ValueError("sru: gamma sums to zero");
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValueError("sru: threshold must lie in (0, 1)");
  }
}

SruParams SruParams::init(std::int64_t channels, GateMode gate, Rng& rng) {
  if (channels < 2 || channels % 2 != 0) {
    throw ShapeError("sru: channel count must be even and >= 2, got " + std::to_string(channels));
  }
  SruParams p;
  p.gn.num_groups = std::gcd(channels, std::int64_t{4});
  p.gn.gamma = rng.vector(static_cast<std::size_t>(channels), 0.5, 1.5);
  p.gn.beta = rng.vector(static_cast<std::size_t>(channels), -0.5, 0.5);
  p.gate = gate;
  return p;
}

std::vector<double> sru_channel_weights(const GroupNormParams& gn) {
  double total = 0.0;
  for (double g : gn.gamma) total += g;
  if (!(total > 0.0)) throw ValueError("sru: gamma sums to zero");
  std::vector<double> w(gn.gamma.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = gn.gamma[i] / total;
  return w;
}

CrossAdd sru_reconstruct(const Tensor& x, const Tensor& w1, const Tensor& w2) {
  if (x.c() % 2 != 0) throw ShapeError("sru: channel count must be even");
  const Tensor x1w = multiply(w1, x);
  const Tensor x2w = multiply(w2, x);
  const std::int64_t half = x.c() / 2;
  auto [x11, x12] = split_channels(x1w, half);
  auto [x21, x22] = split_channels(x2w, half);
  CrossAdd r{add(x11, x22), add(x21, x12), {}};
  r.output = concat_channels(r.xw1, r.xw2);
  return r;
}

SruResult sru_forward(const Tensor& x, const SruParams& params) {
  params.validate(x.c());
  require_finite(x, "sru");
  SruResult r;
  SruTrace& t = r.trace;
  t.channel_weights = sru_channel_weights(params.gn);
  t.normalized = group_norm(x, params.gn);
  t.gate = sigmoid(scale_channels(t.normalized, t.channel_weights));
  if (params.gate == GateMode::hard) {
    t.w1 = Tensor(x.shape());
    t.w2 = Tensor(x.shape());
    const auto g = t.gate.data();
    auto a = t.w1.data();
    auto b = t.w2.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      a[i] = g[i] >= params.threshold ? 1.0 : 0.0;
      b[i] = 1.0 - a[i];
    }
  } else {
    t.w1 = t.gate;
    t.w2 = Tensor(x.shape());
    const auto g = t.gate.data();
    auto b = t.w2.data();
    for (std::size_t i = 0; i < g.size(); ++i) b[i] = 1.0 - g[i];
  }
  t.x1w = multiply(t.w1, x);
  t.x2w = multiply(t.w2, x);
  CrossAdd ca = sru_reconstruct(x, t.w1, t.w2);
  t.xw1 = std::move(ca.xw1);
  t.xw2 = std::move(ca.xw2);
  r.output = std::move(ca.output);
  return r;
}

SruGrads sru_backward(const Tensor& x, const SruParams& params, const Tensor& grad_output) {
  if (grad_output.shape() != x.shape()) {
    throw ShapeError("sru_backward: grad_output shape " + grad_output.shape().str());
  }
  const SruResult fwd = sru_forward(x, params);
  const SruTrace& t = fwd.trace;

  const Tensor& d_x1w = grad_output;
  const Tensor d_x2w = swap_halves(grad_output);

  SruGrads g{add(multiply(t.w1, d_x1w), multiply(t.w2, d_x2w)), params};
  std::fill(g.params.gn.gamma.begin(), g.params.gn.gamma.end(), 0.0);
  std::fill(g.params.gn.beta.begin(), g.params.gn.beta.end(), 0.0);
  if (params.gate == GateMode::hard) return g;

  // W1 = W, W2 = 1 - W
  const Tensor d_gate = multiply(x, subtract(d_x1w, d_x2w));
  const Tensor d_logit = sigmoid_backward(t.gate, d_gate);

  const std::size_t channels = static_cast<std::size_t>(x.c());
  std::vector<double> d_weight(channels, 0.0);
  for (std::int64_t n = 0; n < x.n(); ++n)
    for (std::int64_t c = 0; c < x.c(); ++c) {
      const auto dz = d_logit.plane(n, c);
      const auto gn = t.normalized.plane(n, c);
      for (std::size_t i = 0; i < dz.size(); ++i) d_weight[static_cast<std::size_t>(c)] += dz[i] * gn[i];
    }
  const Tensor d_normalized = scale_channels(d_logit, t.channel_weights);
  GroupNormGrads gg = group_norm_backward(x, params.gn, d_normalized);
  add_inplace(g.input, gg.input);

  // w_i = gamma_i / S
  double total = 0.0;
  for (double v : params.gn.gamma) total += v;
  double dot = 0.0;
  for (std::size_t i = 0; i < channels; ++i) dot += d_weight[i] * params.gn.gamma[i];
  for (std::size_t i = 0; i < channels; ++i) {
    g.params.gn.gamma[i] = gg.gamma[i] + d_weight[i] / total - dot / (total * total);
    g.params.gn.beta[i] = gg.beta[i];
  }
  return g;
}

// ---------------------------------------------------------------------------
// CRU
// ---------------------------------------------------------------------------

CruWidths CruParams::widths(std::int64_t channels, double alpha, std::int64_t ratio,
                            std::int64_t gwc_groups) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValueError("cru: alpha must lie in (0, 1)");
  if (ratio < 1) throw ValueError("cru: compression ratio must be >= 1");
  if (gwc_groups < 1) throw ValueError("cru: gwc_groups must be >= 1");
  const double upper_real = alpha * static_cast<double>(channels);
  const auto upper = static_cast<std::int64_t>(std::llround(upper_real));
  auto fail = [&](const std::string& why) {
    throw ShapeError("cru: C=" + std::to_string(channels) + ", alpha=" + std::to_string(alpha) +
                     ", r=" + std::to_string(ratio) + ": " + why);
  };
  if (std::abs(upper_real - static_cast<double>(upper)) > 1e-9) fail("alpha*C is not an integer");
  CruWidths w{channels, upper, channels - upper, 0, 0, 0};
  if (w.upper < 1 || w.lower < 1) fail("both channel parts must be non-empty");
  if (w.upper % ratio != 0 || w.lower % ratio != 0) fail("parts not divisible by r");
  w.upper_sq = w.upper / ratio;
  w.lower_sq = w.lower / ratio;
  w.lower_pwc = channels - w.lower_sq;
  if (w.upper_sq % gwc_groups != 0 || channels % gwc_groups != 0) {
    fail("GWC groups must divide alpha*C/r and C");
  }
  if (w.lower_pwc < 1) fail("lower PWC would have no output channels");
  return w;
}

void CruParams::validate(std::int64_t channels) const {
  const CruWidths w = widths(channels);
  if (gwc_kernel < 1 || gwc_kernel % 2 == 0) throw ValueError("cru: GWC kernel must be odd");
  auto expect = [](const Tensor& t, Shape s, const char* name) {
    if (t.shape() != s) {
      throw ShapeError(std::string("cru: ") + name + " has shape " + t.shape().str() +
                       ", expected " + s.str());
    }
  };
  expect(squeeze_upper, {w.upper_sq, w.upper, 1, 1}, "squeeze_upper");
  expect(squeeze_lower, {w.lower_sq, w.lower, 1, 1}, "squeeze_lower");
  expect(gwc, {channels, w.upper_sq / gwc_groups, gwc_kernel, gwc_kernel}, "gwc");
  expect(pwc_upper, {channels, w.upper_sq, 1, 1}, "pwc_upper");
  expect(pwc_lower, {w.lower_pwc, w.lower_sq, 1, 1}, "pwc_lower");
}

CruParams CruParams::init(std::int64_t channels, double alpha, std::int64_t ratio,
                          std::int64_t gwc_groups, Rng& rng) {
  const CruWidths w = widths(channels, alpha, ratio, gwc_groups);
  CruParams p;
  p.alpha = alpha;
  p.ratio = ratio;
  p.gwc_groups = gwc_groups;
  const std::int64_t k = p.gwc_kernel;
  p.squeeze_upper = rng.kaiming_uniform({w.upper_sq, w.upper, 1, 1}, w.upper);
  p.squeeze_lower = rng.kaiming_uniform({w.lower_sq, w.lower, 1, 1}, w.lower);
  p.gwc = rng.kaiming_uniform({channels, w.upper_sq / gwc_groups, k, k}, w.upper_sq / gwc_groups * k * k);
  p.pwc_upper = rng.kaiming_uniform({channels, w.upper_sq, 1, 1}, w.upper_sq);
  p.pwc_lower = rng.kaiming_uniform({w.lower_pwc, w.lower_sq, 1, 1}, w.lower_sq);
  return p;
}

namespace {

struct CruSpecs {
  CruWidths w;
  ConvSpec squeeze_upper;
  ConvSpec squeeze_lower;
  ConvSpec gwc;
  ConvSpec pwc_upper;
  ConvSpec pwc_lower;
};

CruSpecs cru_specs(const CruParams& p, std::int64_t channels) {
  p.validate(channels);
  const CruWidths w = p.widths(channels);
  return {w,
          pointwise(w.upper, w.upper_sq),
          pointwise(w.lower, w.lower_sq),
          ConvSpec::same(w.upper_sq, channels, p.gwc_kernel, p.gwc_groups),
          pointwise(w.upper_sq, channels),
          pointwise(w.lower_sq, w.lower_pwc)};
}

struct CruForwardState {
  Tensor x_upper, x_lower;  // split input
  Tensor s_upper, s_lower;  // compressed
  CruResult result;
};

CruForwardState cru_forward_state(const Tensor& x, const CruParams& p, MacCounter* counter) {
  const CruSpecs s = cru_specs(p, x.c());
  require_finite(x, "cru");
  CruForwardState st;
  std::tie(st.x_upper, st.x_lower) = split_channels(x, s.w.upper);
  st.s_upper = conv2d(st.x_upper, p.squeeze_upper, s.squeeze_upper, counter);
  st.s_lower = conv2d(st.x_lower, p.squeeze_lower, s.squeeze_lower, counter);

  CruTrace& t = st.result.trace;
  t.y1 = add(conv2d(st.s_upper, p.gwc, s.gwc, counter),
             conv2d(st.s_upper, p.pwc_upper, s.pwc_upper, counter));
  t.y2 = concat_channels(conv2d(st.s_lower, p.pwc_lower, s.pwc_lower, counter), st.s_lower);
  t.s1 = global_avg_pool(t.y1);
  t.s2 = global_avg_pool(t.y2);
  t.beta1 = Tensor(t.s1.shape());
  t.beta2 = Tensor(t.s1.shape());
  const auto s1 = t.s1.data();
  const auto s2 = t.s2.data();
  auto b1 = t.beta1.data();
  auto b2 = t.beta2.data();
  for (std::size_t i = 0; i < s1.size(); ++i) {
    const double m = std::max(s1[i], s2[i]);
    const double e1 = std::exp(s1[i] - m);
    const double e2 = std::exp(s2[i] - m);
    b1[i] = e1 / (e1 + e2);
    b2[i] = e2 / (e1 + e2);
  }
  Tensor& out = st.result.output;
  out = Tensor(x.shape());
  for (std::int64_t n = 0; n < x.n(); ++n)
    for (std::int64_t c = 0; c < x.c(); ++c) {
      const double a = t.beta1.at(n, c, 0, 0);
      const double b = t.beta2.at(n, c, 0, 0);
      const auto y1 = t.y1.plane(n, c);
      const auto y2 = t.y2.plane(n, c);
      auto o = out.plane(n, c);
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * y1[i] + b * y2[i];
    }
  return st;
}

}  // namespace

CruResult cru_forward(const Tensor& x, const CruParams& params, MacCounter* counter) {
  return std::move(cru_forward_state(x, params, counter).result);
}

CruGrads cru_backward(const Tensor& x, const CruParams& p, const Tensor& grad_output) {
  if (grad_output.shape() != x.shape()) {
    throw ShapeError("cru_backward: grad_output shape " + grad_output.shape().str());
  }
  const CruSpecs s = cru_specs(p, x.c());
  const CruForwardState st = cru_forward_state(x, p, nullptr);
  const CruTrace& t = st.result.trace;

  // out = b1*Y1 + b2*Y2 per (n, c)
  Tensor d_y1(t.y1.shape());
  Tensor d_y2(t.y2.shape());
  Tensor d_s1(t.s1.shape());
  Tensor d_s2(t.s2.shape());
  for (std::int64_t n = 0; n < x.n(); ++n)
    for (std::int64_t c = 0; c < x.c(); ++c) {
      const double b1 = t.beta1.at(n, c, 0, 0);
      const double b2 = t.beta2.at(n, c, 0, 0);
      const auto g = grad_output.plane(n, c);
      const auto y1 = t.y1.plane(n, c);
      const auto y2 = t.y2.plane(n, c);
      auto dy1 = d_y1.plane(n, c);
      auto dy2 = d_y2.plane(n, c);
      double db1 = 0.0;
      double db2 = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        dy1[i] = b1 * g[i];
        dy2[i] = b2 * g[i];
        db1 += g[i] * y1[i];
        db2 += g[i] * y2[i];
      }
      // two-way softmax Jacobian
      const double mean = b1 * db1 + b2 * db2;
      d_s1.at(n, c, 0, 0) = b1 * (db1 - mean);
      d_s2.at(n, c, 0, 0) = b2 * (db2 - mean);
    }
  add_inplace(d_y1, global_avg_pool_backward(t.y1.shape(), d_s1));
  add_inplace(d_y2, global_avg_pool_backward(t.y2.shape(), d_s2));

  CruGrads g{Tensor(x.shape()), p};

  auto gwc = conv2d_backward(st.s_upper, p.gwc, s.gwc, d_y1);
  auto pwu = conv2d_backward(st.s_upper, p.pwc_upper, s.pwc_upper, d_y1);
  Tensor d_s_upper = add(gwc.input, pwu.input);

  auto [d_pwl_out, d_s_lower] = split_channels(d_y2, s.w.lower_pwc);
  auto pwl = conv2d_backward(st.s_lower, p.pwc_lower, s.pwc_lower, d_pwl_out);
  add_inplace(d_s_lower, pwl.input);

  auto squ = conv2d_backward(st.x_upper, p.squeeze_upper, s.squeeze_upper, d_s_upper);
  auto sql = conv2d_backward(st.x_lower, p.squeeze_lower, s.squeeze_lower, d_s_lower);

  g.input = concat_channels(squ.input, sql.input);
  g.params.squeeze_upper = std::move(squ.weight);
  g.params.squeeze_lower = std::move(sql.weight);
  g.params.gwc = std::move(gwc.weight);
  g.params.pwc_upper = std::move(pwu.weight);
  g.params.pwc_lower = std::move(pwl.weight);
  return g;
}

// ---------------------------------------------------------------------------
// SCConv
// ---------------------------------------------------------------------------

Tensor scconv_forward(const Tensor& x, const SruParams& sru, const CruParams& cru,
                      MacCounter* counter) {
  return cru_forward(sru_forward(x, sru).output, cru, counter).output;
}

SCConvGrads scconv_backward(const Tensor& x, const SCConvParams& params,
                            const Tensor& grad_output) {
  const Tensor mid = sru_forward(x, params.sru).output;
  CruGrads cg = cru_backward(mid, params.cru, grad_output);
  SruGrads sg = sru_backward(x, params.sru, cg.input);
  return {std::move(sg.input), {std::move(sg.params), std::move(cg.params)}};
}

SruLayer::SruLayer(SruParams params) : params_(std::move(params)) {
  params_.validate(params_.gn.channels());
}

Shape SruLayer::output_shape(const Shape& input) const {
  params_.validate(input.c);
  return input;
}

Tensor SruLayer::forward(const Tensor& x, MacCounter*) const {
  return sru_forward(x, params_).output;
}

std::optional<std::string> SruLayer::backward_unavailable() const {
  if (params_.gate == GateMode::hard) {
    return "sru hard gate is a step function; use gate mode \"soft\" for gradient checks";
  }
  return std::nullopt;
}

LayerGrads SruLayer::backward(const Tensor& x, const Tensor& grad_output) const {
  if (auto why = backward_unavailable()) throw UnsupportedModeError(*why);
  auto g = sru_backward(x, params_, grad_output);
  return {std::move(g.input), detail::flatten_grads(g.params)};
}

CruLayer::CruLayer(CruParams params) : params_(std::move(params)) {
  params_.validate(params_.channels());
}

Shape CruLayer::output_shape(const Shape& input) const {
  params_.validate(input.c);
  if (input.h < 1 || input.w < 1) throw ShapeError("cru: empty spatial extent");
  return input;
}

Tensor CruLayer::forward(const Tensor& x, MacCounter* counter) const {
  return cru_forward(x, params_, counter).output;
}

LayerGrads CruLayer::backward(const Tensor& x, const Tensor& grad_output) const {
  auto g = cru_backward(x, params_, grad_output);
  return {std::move(g.input), detail::flatten_grads(g.params)};
}

SCConvLayer::SCConvLayer(SCConvParams params) : params_(std::move(params)) {
  params_.sru.validate(params_.sru.gn.channels());
  params_.cru.validate(params_.sru.gn.channels());
}

Shape SCConvLayer::output_shape(const Shape& input) const {
  params_.sru.validate(input.c);
  params_.cru.validate(input.c);
  return input;
}

Tensor SCConvLayer::forward(const Tensor& x, MacCounter* counter) const {
  return scconv_forward(x, params_.sru, params_.cru, counter);
}

std::optional<std::string> SCConvLayer::backward_unavailable() const {
  if (params_.sru.gate == GateMode::hard) {
    return "scconv with the hard SRU gate is a step function; use gate mode \"soft\" for "
           "gradient checks";
  }
  return std::nullopt;
}

LayerGrads SCConvLayer::backward(const Tensor& x, const Tensor& grad_output) const {
  if (auto why = backward_unavailable()) throw UnsupportedModeError(*why);
  auto g = scconv_backward(x, params_, grad_output);
  return {std::move(g.input), detail::flatten_grads(g.params)};
}

}  // namespace lwconv
