#include "lwconv/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "lwconv/error.hpp"
#include "lwconv/init.hpp"

namespace lwconv {

std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> theta, double eps) {
  if (!(eps > 0.0)) throw ValueError("numeric_gradient: eps must be > 0");
  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> grad(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double orig = point[i];
    point[i] = orig + eps;
    const double up = f(point);
    point[i] = orig - eps;
    const double down = f(point);
    point[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw ValueError("numeric_gradient: function returned a non-finite value");
    }
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double relative_error(double analytic, double numeric) noexcept {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / denom;
}

std::string_view to_string(GradCheckStatus s) noexcept {
  switch (s) {
    case GradCheckStatus::passed:
      return "passed";
    case GradCheckStatus::failed:
      return "failed";
    case GradCheckStatus::unsupported_mode:
      return "unsupported-mode";
  }
  return "failed";
}

double GradCheckReport::max_rel_error() const noexcept {
  double m = 0.0;
  for (const auto& g : groups) m = std::max(m, g.max_rel_error);
  return m;
}

namespace {

// sum_i r_i * (y_i - base_i). The constant base term cancels in a central
// difference; dropping it keeps the O(1) loss magnitude out of the
// subtraction, so tiny gradients are not swamped by rounding.
double weighted_delta(const Tensor& y, const Tensor& base, const Tensor& weights) {
  long double s = 0.0L;
  const auto a = y.data();
  const auto b = base.data();
  const auto r = weights.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(r[i]) * (a[i] - b[i]);
  return static_cast<double>(s);
}

GroupError compare(std::string name, std::span<const double> analytic,
                   std::span<const double> numeric) {
  GroupError e{std::move(name), analytic.size(), 0.0, 0.0, 0, 0.0, 0.0};
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    e.max_abs_error = std::max(e.max_abs_error, std::abs(analytic[i] - numeric[i]));
    const double r = relative_error(analytic[i], numeric[i]);
    if (r > e.max_rel_error || i == 0) {
      e.max_rel_error = r;
      e.worst_index = i;
      e.analytic_at_worst = analytic[i];
      e.numeric_at_worst = numeric[i];
    }
  }
  return e;
}

}  // namespace

GradCheckReport check_module(Layer& layer, const Shape& input_shape, std::uint64_t seed,
                             const GradCheckOptions& options) {
  GradCheckReport report;
  report.target = std::string(layer.kind());
  report.input_shape = input_shape;
  report.seed = seed;
  report.epsilon = options.epsilon;
  report.tolerance = options.tolerance;

  if (auto why = layer.backward_unavailable()) {
    report.status = GradCheckStatus::unsupported_mode;
    report.note = *why;
    return report;
  }

  Rng rng(seed);
  const Tensor x = rng.tensor(input_shape);
  const Shape out_shape = layer.output_shape(input_shape);
  const Tensor upstream = rng.tensor(out_shape);

  const Layer& view = layer;
  const LayerGrads analytic = view.backward(x, upstream);
  const Tensor base = view.forward(x, nullptr);

  // input
  {
    auto loss = [&](std::span<const double> point) {
      const Tensor xp(input_shape, std::vector<double>(point.begin(), point.end()));
      return weighted_delta(view.forward(xp, nullptr), base, upstream);
    };
    const auto numeric = numeric_gradient(loss, x.data(), options.epsilon);
    report.groups.push_back(compare("input", analytic.input.data(), numeric));
  }

  auto params = layer.parameters();
  if (analytic.params.size() != params.size()) {
    throw Error("check_module: backward returned " + std::to_string(analytic.params.size()) +
                " parameter gradients for " + std::to_string(params.size()) + " groups");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::span<double> values = params[p].values;
    const std::vector<double> saved(values.begin(), values.end());
    auto loss = [&](std::span<const double> point) {
      std::copy(point.begin(), point.end(), values.begin());
      return weighted_delta(view.forward(x, nullptr), base, upstream);
    };
    const auto numeric = numeric_gradient(loss, saved, options.epsilon);
    std::copy(saved.begin(), saved.end(), values.begin());
    if (analytic.params[p].size() != values.size()) {
      throw Error("check_module: gradient size mismatch for " + params[p].name);
    }
    report.groups.push_back(compare(params[p].name, analytic.params[p], numeric));
  }

  const bool ok = std::all_of(report.groups.begin(), report.groups.end(), [&](const GroupError& g) {
    return g.max_rel_error < options.tolerance;
  });
  report.status = ok ? GradCheckStatus::passed : GradCheckStatus::failed;
  return report;
}

std::string to_json(const GradCheckReport& r) {
  nlohmann::ordered_json groups = nlohmann::ordered_json::array();
  for (const auto& g : r.groups) {
    groups.push_back({{"name", g.name},
                      {"size", g.size},
                      {"max_rel_error", g.max_rel_error},
                      {"max_abs_error", g.max_abs_error},
                      {"worst_index", g.worst_index},
                      {"analytic", g.analytic_at_worst},
                      {"numeric", g.numeric_at_worst}});
  }
  nlohmann::ordered_json j = {
      {"target", r.target},
      {"input_shape", {r.input_shape.n, r.input_shape.c, r.input_shape.h, r.input_shape.w}},
      {"seed", r.seed},
      {"epsilon", r.epsilon},
      {"tolerance", r.tolerance},
      {"loss", "sum(r * y), r ~ U[-1,1] seeded"},
      {"status", to_string(r.status)},
      {"pass", r.passed()},
      {"max_rel_error", r.max_rel_error()},
      {"groups", groups}};
  if (!r.note.empty()) j["note"] = r.note;
  return j.dump(2);
}

}  // namespace lwconv
