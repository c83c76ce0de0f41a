#ifndef LWCONV_SCCONV_HPP
#define LWCONV_SCCONV_HPP

#include <string>
#include <vector>

#include "lwconv/init.hpp"
#include "lwconv/layer.hpp"
#include "lwconv/layers.hpp"
#include "lwconv/norm.hpp"

namespace lwconv {

// ---------------------------------------------------------------------------
// Spatial reconstruction unit
// ---------------------------------------------------------------------------

// hard: W1 = [W >= threshold], W2 = 1 - W1.  soft: W1 = W, W2 = 1 - W.
enum class GateMode { hard, soft };

std::string_view to_string(GateMode mode) noexcept;
GateMode parse_gate_mode(std::string_view text);

struct SruParams {
  GroupNormParams gn;
  double threshold = 0.5;
  GateMode gate = GateMode::hard;

  // C even, gamma >= 0 with positive sum, threshold in (0,1).
  void validate(std::int64_t channels) const;

  // gamma ~ U[0.5, 1.5], beta ~ U[-0.5, 0.5]; num_groups = gcd(C, 4).
  static SruParams init(std::int64_t channels, GateMode gate, Rng& rng);
};

template <class S, class F>
  requires std::same_as<std::remove_const_t<S>, SruParams>
void for_each_param(S& p, F&& f, const std::string& prefix) {
  for_each_param(p.gn, f, prefix + "gn.");
}

struct SruTrace {
  std::vector<double> channel_weights;  // w_i = gamma_i / sum(gamma)
  Tensor normalized;                    // GN(X)
  Tensor gate;                          // W = sigmoid(w_i * GN(X))
  Tensor w1;
  Tensor w2;
  Tensor x1w;  // W1 * X
  Tensor x2w;  // W2 * X
  Tensor xw1;  // X11 + X22
  Tensor xw2;  // X21 + X12
};

struct SruResult {
  Tensor output;  // concat(xw1, xw2)
  SruTrace trace;
};

std::vector<double> sru_channel_weights(const GroupNormParams& gn);

SruResult sru_forward(const Tensor& x, const SruParams& params);

struct CrossAdd {
  Tensor xw1;
  Tensor xw2;
  Tensor output;
};

// Masks the input with w1/w2 and cross-adds the channel halves:
//   X1w = W1*X, X2w = W2*X, Xw1 = X11 + X22, Xw2 = X21 + X12.
CrossAdd sru_reconstruct(const Tensor& x, const Tensor& w1, const Tensor& w2);

struct SruGrads {
  Tensor input;
  SruParams params;
};

// In hard mode the indicator is treated as constant, so only the masking
// path carries gradient and the GN parameters receive zero.
SruGrads sru_backward(const Tensor& x, const SruParams& params, const Tensor& grad_output);

// ---------------------------------------------------------------------------
// Channel reconstruction unit
// ---------------------------------------------------------------------------

struct CruWidths {
  std::int64_t channels = 0;   // C
  std::int64_t upper = 0;      // alpha*C
  std::int64_t lower = 0;      // (1-alpha)*C
  std::int64_t upper_sq = 0;   // alpha*C/r
  std::int64_t lower_sq = 0;   // (1-alpha)*C/r
  std::int64_t lower_pwc = 0;  // C - (1-alpha)*C/r
};

struct CruParams {
  double alpha = 0.5;
  std::int64_t ratio = 2;
  std::int64_t gwc_groups = 2;
  std::int64_t gwc_kernel = 3;
  Tensor squeeze_upper;  // (upper_sq, upper, 1, 1)
  Tensor squeeze_lower;  // (lower_sq, lower, 1, 1)
  Tensor gwc;            // (C, upper_sq/groups, k, k)
  Tensor pwc_upper;      // (C, upper_sq, 1, 1)
  Tensor pwc_lower;      // (C - lower_sq, lower_sq, 1, 1)

  // Throws ShapeError/ValueError when the split does not produce positive
  // integer widths or the groups do not divide.
  static CruWidths widths(std::int64_t channels, double alpha, std::int64_t ratio,
                          std::int64_t gwc_groups);
  CruWidths widths(std::int64_t channels) const {
    return widths(channels, alpha, ratio, gwc_groups);
  }
  std::int64_t channels() const noexcept { return gwc.n(); }
  void validate(std::int64_t channels) const;

  static CruParams init(std::int64_t channels, double alpha, std::int64_t ratio,
                        std::int64_t gwc_groups, Rng& rng);
};

template <class S, class F>
  requires std::same_as<std::remove_const_t<S>, CruParams>
void for_each_param(S& p, F&& f, const std::string& prefix) {
  f(prefix + "squeeze_upper", p.squeeze_upper);
  f(prefix + "squeeze_lower", p.squeeze_lower);
  f(prefix + "gwc", p.gwc);
  f(prefix + "pwc_upper", p.pwc_upper);
  f(prefix + "pwc_lower", p.pwc_lower);
}

struct CruTrace {
  Tensor s1;     // (n, C, 1, 1) pooled Y1
  Tensor s2;     // (n, C, 1, 1) pooled Y2
  Tensor beta1;  // e^s1 / (e^s1 + e^s2)
  Tensor beta2;
  Tensor y1;  // GWC(Xu) + PWC(Xu)
  Tensor y2;  // concat(PWC(Xl), Xl)
};

struct CruResult {
  Tensor output;  // beta1*Y1 + beta2*Y2
  CruTrace trace;
};

CruResult cru_forward(const Tensor& x, const CruParams& params, MacCounter* counter = nullptr);

struct CruGrads {
  Tensor input;
  CruParams params;
};

CruGrads cru_backward(const Tensor& x, const CruParams& params, const Tensor& grad_output);

// ---------------------------------------------------------------------------
// SCConv = CRU(SRU(x))
// ---------------------------------------------------------------------------

struct SCConvParams {
  SruParams sru;
  CruParams cru;
};

template <class S, class F>
  requires std::same_as<std::remove_const_t<S>, SCConvParams>
void for_each_param(S& p, F&& f, const std::string& prefix) {
  for_each_param(p.sru, f, prefix + "sru.");
  for_each_param(p.cru, f, prefix + "cru.");
}

Tensor scconv_forward(const Tensor& x, const SruParams& sru, const CruParams& cru,
                      MacCounter* counter = nullptr);

struct SCConvGrads {
  Tensor input;
  SCConvParams params;
};

SCConvGrads scconv_backward(const Tensor& x, const SCConvParams& params,
                            const Tensor& grad_output);

class SruLayer final : public Layer {
 public:
  explicit SruLayer(SruParams params);

  std::string_view kind() const override { return "sru"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  std::optional<std::string> backward_unavailable() const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override { return detail::collect_params(params_); }
  std::vector<ConstParamRef> parameters() const override { return detail::collect_params(params_); }

 private:
  SruParams params_;
};

class CruLayer final : public Layer {
 public:
  explicit CruLayer(CruParams params);

  std::string_view kind() const override { return "cru"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override { return detail::collect_params(params_); }
  std::vector<ConstParamRef> parameters() const override { return detail::collect_params(params_); }

 private:
  CruParams params_;
};

class SCConvLayer final : public Layer {
 public:
  explicit SCConvLayer(SCConvParams params);

  std::string_view kind() const override { return "scconv"; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, MacCounter* counter) const override;
  std::optional<std::string> backward_unavailable() const override;
  LayerGrads backward(const Tensor& x, const Tensor& grad_output) const override;
  std::vector<ParamRef> parameters() override { return detail::collect_params(params_); }
  std::vector<ConstParamRef> parameters() const override { return detail::collect_params(params_); }

 private:
  SCConvParams params_;
};

}  // namespace lwconv

#endif  // LWCONV_SCCONV_HPP
