#include "lwconv/norm.hpp"

#include <cmath>
#include <string>

#include "lwconv/error.hpp"

namespace lwconv {
namespace {

struct GroupStats {
  std::vector<double> mean;     // per (n, group)
  std::vector<double> inv_std;  // per (n, group)
};

GroupStats compute_stats(const Tensor& x, const GroupNormParams& p) {
  const std::int64_t cg = x.c() / p.num_groups;
  const std::int64_t count = cg * x.shape().spatial();
  GroupStats st;
  st.mean.reserve(static_cast<std::size_t>(x.n() * p.num_groups));
  st.inv_std.reserve(st.mean.capacity());
  for (std::int64_t n = 0; n < x.n(); ++n) {
    for (std::int64_t g = 0; g < p.num_groups; ++g) {
      const auto vals = x.data().subspan(x.offset(n, g * cg, 0, 0), static_cast<std::size_t>(count));
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(count);
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      var /= static_cast<double>(count);
      st.mean.push_back(mean);
      st.inv_std.push_back(1.0 / std::sqrt(var + p.epsilon));
    }
  }
  return st;
}

void check(const Tensor& x, const GroupNormParams& p) {
  p.validate(x.c());
  require_finite(x, "group_norm");
}

}  // namespace

void GroupNormParams::validate(std::int64_t channels) const {
  if (gamma.size() != beta.size()) {
    throw ShapeError("group_norm: gamma and beta lengths differ");
  }
  if (channels != this->channels()) {
    throw ShapeError("group_norm: " + std::to_string(channels) + " input channels but " +
                     std::to_string(gamma.size()) + " affine parameters");
  }
  if (num_groups < 1 || channels % num_groups != 0) {
    throw ShapeError("group_norm: " + std::to_string(channels) +
                     " channels not divisible into " + std::to_string(num_groups) + " groups");
  }
  if (!(epsilon > 0.0)) throw ValueError("group_norm: epsilon must be > 0");
}

Tensor group_norm_standardize(const Tensor& x, const GroupNormParams& params) {
  check(x, params);
  const GroupStats st = compute_stats(x, params);
  const std::int64_t cg = x.c() / params.num_groups;
  Tensor out(x.shape());
  for (std::int64_t n = 0; n < x.n(); ++n)
    for (std::int64_t c = 0; c < x.c(); ++c) {
      const std::size_t gi = static_cast<std::size_t>(n * params.num_groups + c / cg);
      const auto src = x.plane(n, c);
      auto dst = out.plane(n, c);
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] - st.mean[gi]) * st.inv_std[gi];
    }
  return out;
}

Tensor group_norm(const Tensor& x, const GroupNormParams& params) {
  Tensor out = group_norm_standardize(x, params);
  for (std::int64_t n = 0; n < x.n(); ++n)
    for (std::int64_t c = 0; c < x.c(); ++c) {
      const double g = params.gamma[static_cast<std::size_t>(c)];
      const double b = params.beta[static_cast<std::size_t>(c)];
      for (double& v : out.plane(n, c)) v = g * v + b;
    }
  return out;
}

GroupNormGrads group_norm_backward(const Tensor& x, const GroupNormParams& params,
                                   const Tensor& grad_output) {
  check(x, params);
  if (grad_output.shape() != x.shape()) {
    throw ShapeError("group_norm_backward: grad_output shape " + grad_output.shape().str());
  }
  const GroupStats st = compute_stats(x, params);
  const std::int64_t cg = x.c() / params.num_groups;
  const std::int64_t hw = x.shape().spatial();
  const double m = static_cast<double>(cg * hw);

  GroupNormGrads g{Tensor(x.shape()), std::vector<double>(params.gamma.size(), 0.0),
                   std::vector<double>(params.beta.size(), 0.0)};
  for (std::int64_t n = 0; n < x.n(); ++n) {
    for (std::int64_t grp = 0; grp < params.num_groups; ++grp) {
      const std::size_t gi = static_cast<std::size_t>(n * params.num_groups + grp);
      const double mu = st.mean[gi];
      const double is = st.inv_std[gi];
      // sums of dxhat and dxhat * xhat over the group
      double sum_d = 0.0;
      double sum_dx = 0.0;
      for (std::int64_t c = grp * cg; c < (grp + 1) * cg; ++c) {
        const double gam = params.gamma[static_cast<std::size_t>(c)];
        const auto xs = x.plane(n, c);
        const auto gy = grad_output.plane(n, c);
        for (std::int64_t i = 0; i < hw; ++i) {
          const double xhat = (xs[static_cast<std::size_t>(i)] - mu) * is;
          const double dy = gy[static_cast<std::size_t>(i)];
          g.beta[static_cast<std::size_t>(c)] += dy;
          g.gamma[static_cast<std::size_t>(c)] += dy * xhat;
          sum_d += dy * gam;
          sum_dx += dy * gam * xhat;
        }
      }
      for (std::int64_t c = grp * cg; c < (grp + 1) * cg; ++c) {
        const double gam = params.gamma[static_cast<std::size_t>(c)];
        const auto xs = x.plane(n, c);
        const auto gy = grad_output.plane(n, c);
        auto gx = g.input.plane(n, c);
        for (std::int64_t i = 0; i < hw; ++i) {
          const std::size_t k = static_cast<std::size_t>(i);
          const double xhat = (xs[k] - mu) * is;
          gx[k] = is / m * (m * gy[k] * gam - sum_d - xhat * sum_dx);
        }
      }
    }
  }
  return g;
}

}  // namespace lwconv
