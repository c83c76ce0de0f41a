#ifndef LWCONV_LAYER_HPP
#define LWCONV_LAYER_HPP

#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "lwconv/conv.hpp"
#include "lwconv/tensor.hpp"

namespace lwconv {

enum class ParamRole { weight, bias };

// Named view of one learnable parameter group. Vectors (GN affine terms,
// biases) are presented with shape (1, len, 1, 1).
template <class T>
struct BasicParamRef {
  std::string name;
  std::span<T> values;
  Shape shape;
  ParamRole role = ParamRole::weight;
};

using ParamRef = BasicParamRef<double>;
using ConstParamRef = BasicParamRef<const double>;

// Gradient of a scalar loss w.r.t. a layer's input and each parameter group,
// in parameters() order.
struct LayerGrads {
  Tensor input;
  std::vector<std::vector<double>> params;
};

// Single-input differentiable block. Forward passes are const and pure;
// parameters are reachable mutably for weight overrides and perturbation.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string_view kind() const = 0;
  // Throws ShapeError when `input` violates the block's preconditions.
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual Tensor forward(const Tensor& x, MacCounter* counter = nullptr) const = 0;

  // Reason the configured block has no analytic backward, if any.
  virtual std::optional<std::string> backward_unavailable() const { return std::nullopt; }
  // Throws UnsupportedModeError when backward_unavailable() is set.
  virtual LayerGrads backward(const Tensor& x, const Tensor& grad_output) const = 0;

  virtual std::vector<ParamRef> parameters() = 0;
  virtual std::vector<ConstParamRef> parameters() const = 0;
};

struct ParamCount {
  std::uint64_t weights = 0;
  std::uint64_t bias = 0;
};

ParamCount count_parameters(const Layer& layer);

namespace detail {

inline Shape vector_shape(std::size_t len) { return {1, static_cast<std::int64_t>(len), 1, 1}; }

template <class T>
struct ParamCollector {
  std::vector<BasicParamRef<T>>* out;

  template <class Tn>
    requires std::is_same_v<std::remove_const_t<Tn>, Tensor>
  void operator()(std::string name, Tn& t, ParamRole role = ParamRole::weight) const {
    out->push_back({std::move(name), t.data(), t.shape(), role});
  }
  template <class V>
    requires std::is_same_v<std::remove_const_t<V>, std::vector<double>>
  void operator()(std::string name, V& v, ParamRole role = ParamRole::weight) const {
    if (v.empty()) return;
    out->push_back({std::move(name), std::span<T>(v), vector_shape(v.size()), role});
  }
};

// Spec types expose `for_each_param(spec, visitor, prefix)`; this turns that
// walk into a flat list of views.
template <class Spec>
auto collect_params(Spec& spec) {
  using T = std::conditional_t<std::is_const_v<Spec>, const double, double>;
  std::vector<BasicParamRef<T>> out;
  for_each_param(spec, ParamCollector<T>{&out}, std::string{});
  return out;
}

template <class Spec>
std::vector<std::vector<double>> flatten_grads(const Spec& grads) {
  std::vector<std::vector<double>> out;
  for (const auto& ref : collect_params(grads)) out.emplace_back(ref.values.begin(), ref.values.end());
  return out;
}

}  // namespace detail
}  // namespace lwconv

#endif  // LWCONV_LAYER_HPP
