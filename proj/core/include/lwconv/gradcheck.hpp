#ifndef LWCONV_GRADCHECK_HPP
#define LWCONV_GRADCHECK_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lwconv/layer.hpp"

namespace lwconv {

// Central differences (f(t + eps e_i) - f(t - eps e_i)) / (2 eps) for every
// coordinate. Throws ValueError if eps <= 0 or f returns a non-finite value.
std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> theta, double eps);

// |a - n| / max(|a|, |n|, 1e-12)
double relative_error(double analytic, double numeric) noexcept;

struct GradCheckOptions {
  double epsilon = 1e-6;
  double tolerance = 1e-5;
};

enum class GradCheckStatus { passed, failed, unsupported_mode };

std::string_view to_string(GradCheckStatus s) noexcept;

struct GroupError {
  std::string name;  // "input" or a parameter group name
  std::size_t size = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;  // diagnostic; pass/fail uses the relative error only
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

struct GradCheckReport {
  std::string target;
  Shape input_shape;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  double tolerance = 0.0;
  GradCheckStatus status = GradCheckStatus::failed;
  std::string note;
  std::vector<GroupError> groups;

  bool passed() const noexcept { return status == GradCheckStatus::passed; }
  double max_rel_error() const noexcept;
};

// Compares the layer's analytic backward against central differences for
// the input and every parameter group. The loss is L = sum_i r_i * y_i with
// fixed upstream weights r_i ~ U[-1, 1]; input entries ~ U[-1, 1]. Both
// streams come from `seed`. Parameters are perturbed in place and restored.
GradCheckReport check_module(Layer& layer, const Shape& input_shape, std::uint64_t seed,
                             const GradCheckOptions& options = {});

std::string to_json(const GradCheckReport& report);

}  // namespace lwconv

#endif  // LWCONV_GRADCHECK_HPP
