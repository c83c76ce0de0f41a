#ifndef LWCONV_NORM_HPP
#define LWCONV_NORM_HPP

#include <cstdint>
#include <vector>

#include "lwconv/tensor.hpp"

namespace lwconv {

struct GroupNormParams {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::int64_t num_groups = 1;
  double epsilon = 1e-5;

  std::int64_t channels() const noexcept { return static_cast<std::int64_t>(gamma.size()); }
  // Throws ShapeError/ValueError if the record is inconsistent or does not
  // fit `channels`.
  void validate(std::int64_t channels) const;
};

// y = gamma * (x - mean) / sqrt(var + eps) + beta, statistics taken per
// (sample, group) with the biased variance.
Tensor group_norm(const Tensor& x, const GroupNormParams& params);

// The normalized map before the affine step.
Tensor group_norm_standardize(const Tensor& x, const GroupNormParams& params);

struct GroupNormGrads {
  Tensor input;
  std::vector<double> gamma;
  std::vector<double> beta;
};

GroupNormGrads group_norm_backward(const Tensor& x, const GroupNormParams& params,
                                   const Tensor& grad_output);

}  // namespace lwconv

#endif  // LWCONV_NORM_HPP
