#include "lwconv/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lwconv/error.hpp"

namespace lwconv {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + a.shape().str() + " and " +
                     b.shape().str() + " differ");
  }
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, std::string_view op, F f) {
  require_same_shape(a, b, op);
  Tensor out(a.shape());
  const auto x = a.data();
  const auto y = b.data();
  auto z = out.data();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = f(x[i], y[i]);
  return out;
}

void require_factor(std::int64_t factor, std::string_view op) {
  if (factor < 1) throw ValueError(std::string(op) + ": factor must be >= 1");
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  return zip(a, b, "subtract", [](double x, double y) { return x - y; });
}

Tensor multiply(const Tensor& a, const Tensor& b) {
  return zip(a, b, "multiply", [](double x, double y) { return x * y; });
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out = a;
  for (double& v : out.data()) v *= factor;
  return out;
}

Tensor axpby(double a, const Tensor& x, double b, const Tensor& y) {
  return zip(x, y, "axpby", [a, b](double u, double v) { return a * u + b * v; });
}

void add_inplace(Tensor& acc, const Tensor& t) {
  require_same_shape(acc, t, "add_inplace");
  auto z = acc.data();
  const auto y = t.data();
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += y[i];
}

Tensor sigmoid(const Tensor& x) {
  Tensor out(x.shape());
  const auto in = x.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) {
    // split on sign so exp never overflows
    const double v = in[i];
    if (v >= 0) {
      o[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      o[i] = e / (1.0 + e);
    }
  }
  return out;
}

Tensor sigmoid_backward(const Tensor& output, const Tensor& grad_output) {
  return zip(output, grad_output, "sigmoid_backward",
             [](double s, double g) { return g * s * (1.0 - s); });
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  Shape out_shape = parts.front().shape();
  out_shape.c = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    if (s.n != out_shape.n || s.h != out_shape.h || s.w != out_shape.w) {
      throw ShapeError("concat_channels: incompatible shapes " + parts.front().shape().str() +
                       " and " + s.str());
    }
    out_shape.c += s.c;
  }
  Tensor out(out_shape);
  auto dst = out.data().begin();
  for (std::int64_t n = 0; n < out_shape.n; ++n) {
    for (const Tensor& p : parts) {
      const auto src = p.data().subspan(p.offset(n, 0, 0, 0),
                                        static_cast<std::size_t>(p.c() * p.shape().spatial()));
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Tensor parts[] = {a, b};
  return concat_channels(parts);
}

Tensor slice_channels(const Tensor& t, std::int64_t begin, std::int64_t count) {
  if (begin < 0 || count < 1 || begin + count > t.c()) {
    throw ShapeError("slice_channels: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " + t.shape().str());
  }
  Tensor out({t.n(), count, t.h(), t.w()});
  const std::size_t len = static_cast<std::size_t>(count * t.shape().spatial());
  for (std::int64_t n = 0; n < t.n(); ++n) {
    const auto src = t.data().subspan(t.offset(n, begin, 0, 0), len);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(out.offset(n, 0, 0, 0)));
  }
  return out;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& t, std::int64_t first) {
  if (first < 1 || first >= t.c()) {
    throw ShapeError("split_channels: cannot split " + t.shape().str() + " at channel " +
                     std::to_string(first));
  }
  return {slice_channels(t, 0, first), slice_channels(t, first, t.c() - first)};
}

Tensor nearest_upsample(const Tensor& x, std::int64_t factor) {
  require_factor(factor, "nearest_upsample");
  Tensor out({x.n(), x.c(), x.h() * factor, x.w() * factor});
  for (std::int64_t n = 0; n < x.n(); ++n)
    for (std::int64_t c = 0; c < x.c(); ++c)
      for (std::int64_t i = 0; i < out.h(); ++i)
        for (std::int64_t j = 0; j < out.w(); ++j) out.at(n, c, i, j) = x.at(n, c, i / factor, j / factor);
  return out;
}

Tensor nearest_upsample_backward(const Tensor& grad_output, std::int64_t factor) {
  require_factor(factor, "nearest_upsample_backward");
  if (grad_output.h() % factor != 0 || grad_output.w() % factor != 0) {
    throw ShapeError("nearest_upsample_backward: spatial size not divisible by factor");
  }
  Tensor out({grad_output.n(), grad_output.c(), grad_output.h() / factor, grad_output.w() / factor});
  for (std::int64_t n = 0; n < grad_output.n(); ++n)
    for (std::int64_t c = 0; c < grad_output.c(); ++c)
      for (std::int64_t i = 0; i < grad_output.h(); ++i)
        for (std::int64_t j = 0; j < grad_output.w(); ++j)
          out.at(n, c, i / factor, j / factor) += grad_output.at(n, c, i, j);
  return out;
}

Tensor pixel_shuffle(const Tensor& x, std::int64_t factor) {
  require_factor(factor, "pixel_shuffle");
  const std::int64_t blocks = factor * factor;
  if (x.c() % blocks != 0) {
    throw ShapeError("pixel_shuffle: " + std::to_string(x.c()) +
                     " channels not divisible by factor^2 = " + std::to_string(blocks));
  }
  const std::int64_t c = x.c() / blocks;
  Tensor out({x.n(), c, x.h() * factor, x.w() * factor});
  for (std::int64_t n = 0; n < x.n(); ++n)
    for (std::int64_t dy = 0; dy < factor; ++dy)
      for (std::int64_t dx = 0; dx < factor; ++dx)
        for (std::int64_t k = 0; k < c; ++k) {
          const std::int64_t ic = (dy * factor + dx) * c + k;
          for (std::int64_t i = 0; i < x.h(); ++i)
            for (std::int64_t j = 0; j < x.w(); ++j)
              out.at(n, k, factor * i + dy, factor * j + dx) = x.at(n, ic, i, j);
        }
  return out;
}

Tensor pixel_unshuffle(const Tensor& x, std::int64_t factor) {
  require_factor(factor, "pixel_unshuffle");
  if (x.h() % factor != 0 || x.w() % factor != 0) {
    throw ShapeError("pixel_unshuffle: spatial size " + x.shape().str() +
                     " not divisible by factor " + std::to_string(factor));
  }
  const std::int64_t c = x.c();
  Tensor out({x.n(), c * factor * factor, x.h() / factor, x.w() / factor});
  for (std::int64_t n = 0; n < x.n(); ++n)
    for (std::int64_t dy = 0; dy < factor; ++dy)
      for (std::int64_t dx = 0; dx < factor; ++dx)
        for (std::int64_t k = 0; k < c; ++k) {
          const std::int64_t oc = (dy * factor + dx) * c + k;
          for (std::int64_t i = 0; i < out.h(); ++i)
            for (std::int64_t j = 0; j < out.w(); ++j)
              out.at(n, oc, i, j) = x.at(n, k, factor * i + dy, factor * j + dx);
        }
  return out;
}

Tensor softmax_over_channels(const Tensor& x) {
  require_finite(x, "softmax_over_channels");
  Tensor out(x.shape());
  const std::int64_t hw = x.shape().spatial();
  const auto in = x.data();
  auto o = out.data();
  for (std::int64_t n = 0; n < x.n(); ++n) {
    const std::size_t base = x.offset(n, 0, 0, 0);
    for (std::int64_t p = 0; p < hw; ++p) {
      auto idx = [&](std::int64_t c) { return base + static_cast<std::size_t>(c * hw + p); };
      double m = in[idx(0)];
      for (std::int64_t c = 1; c < x.c(); ++c) m = std::max(m, in[idx(c)]);
      double z = 0.0;
      for (std::int64_t c = 0; c < x.c(); ++c) {
        o[idx(c)] = std::exp(in[idx(c)] - m);
        z += o[idx(c)];
      }
      for (std::int64_t c = 0; c < x.c(); ++c) o[idx(c)] /= z;
    }
  }
  return out;
}

Tensor softmax_over_channels_backward(const Tensor& output, const Tensor& grad_output) {
  require_same_shape(output, grad_output, "softmax_over_channels_backward");
  Tensor gx(output.shape());
  const std::int64_t hw = output.shape().spatial();
  const auto s = output.data();
  const auto g = grad_output.data();
  auto o = gx.data();
  for (std::int64_t n = 0; n < output.n(); ++n) {
    const std::size_t base = output.offset(n, 0, 0, 0);
    for (std::int64_t p = 0; p < hw; ++p) {
      auto idx = [&](std::int64_t c) { return base + static_cast<std::size_t>(c * hw + p); };
      double dot = 0.0;
      for (std::int64_t c = 0; c < output.c(); ++c) dot += s[idx(c)] * g[idx(c)];
      for (std::int64_t c = 0; c < output.c(); ++c) o[idx(c)] = s[idx(c)] * (g[idx(c)] - dot);
    }
  }
  return gx;
}

Tensor global_avg_pool(const Tensor& x) {
  if (x.empty() || x.h() < 1 || x.w() < 1) throw ShapeError("global_avg_pool: empty spatial extent");
  Tensor out({x.n(), x.c(), 1, 1});
  const double inv = 1.0 / static_cast<double>(x.shape().spatial());
  for (std::int64_t n = 0; n < x.n(); ++n)
    for (std::int64_t c = 0; c < x.c(); ++c) {
      double s = 0.0;
      for (double v : x.plane(n, c)) s += v;
      out.at(n, c, 0, 0) = s * inv;
    }
  return out;
}

Tensor global_avg_pool_backward(const Shape& input_shape, const Tensor& grad_output) {
  if (grad_output.shape() != Shape{input_shape.n, input_shape.c, 1, 1}) {
    throw ShapeError("global_avg_pool_backward: grad_output shape " + grad_output.shape().str());
  }
  Tensor gx(input_shape);
  const double inv = 1.0 / static_cast<double>(input_shape.spatial());
  for (std::int64_t n = 0; n < input_shape.n; ++n)
    for (std::int64_t c = 0; c < input_shape.c; ++c) {
      const double g = grad_output.at(n, c, 0, 0) * inv;
      for (double& v : gx.plane(n, c)) v = g;
    }
  return gx;
}

}  // namespace lwconv
