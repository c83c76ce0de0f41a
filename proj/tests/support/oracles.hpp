// Reference implementations used only by tests. Each is written as plain
// loops over Tensor::at so it shares no code with the library kernels.
#ifndef LWCONV_TESTS_ORACLES_HPP
#define LWCONV_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lwconv/tensor.hpp"

namespace oracle {

using lwconv::Shape;
using lwconv::Tensor;

struct Counted {
  Tensor out;
  std::uint64_t macs = 0;
};

// Grouped cross-correlation with zero padding; counts every visited tap.
inline Counted conv(const Tensor& x, const Tensor& w, const std::vector<double>& bias,
                    std::int64_t stride, std::int64_t pad, std::int64_t groups) {
  const std::int64_t n = x.n(), m = x.c(), h = x.h(), wd = x.w();
  const std::int64_t out_c = w.n(), k = w.h();
  const std::int64_t ho = (h + 2 * pad - k) / stride + 1;
  const std::int64_t wo = (wd + 2 * pad - k) / stride + 1;
  const std::int64_t in_per_group = m / groups;
  const std::int64_t out_per_group = out_c / groups;
  Counted r{Tensor({n, out_c, ho, wo}), 0};
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t o = 0; o < out_c; ++o)
      for (std::int64_t i = 0; i < ho; ++i)
        for (std::int64_t j = 0; j < wo; ++j) {
          double acc = bias.empty() ? 0.0 : bias[static_cast<std::size_t>(o)];
          const std::int64_t g = o / out_per_group;
          for (std::int64_t ci = 0; ci < in_per_group; ++ci)
            for (std::int64_t a = 0; a < k; ++a)
              for (std::int64_t bb = 0; bb < k; ++bb) {
                ++r.macs;
                const std::int64_t y = i * stride + a - pad;
                const std::int64_t xx = j * stride + bb - pad;
                if (y < 0 || y >= h || xx < 0 || xx >= wd) continue;
                acc += w.at(o, ci, a, bb) * x.at(b, g * in_per_group + ci, y, xx);
              }
          r.out.at(b, o, i, j) = acc;
        }
  return r;
}

inline Tensor conv_same(const Tensor& x, const Tensor& w, std::int64_t groups = 1) {
  return conv(x, w, {}, 1, (w.h() - 1) / 2, groups).out;
}

inline Tensor cat(const Tensor& a, const Tensor& b) {
  Tensor r({a.n(), a.c() + b.c(), a.h(), a.w()});
  for (std::int64_t n = 0; n < a.n(); ++n)
    for (std::int64_t c = 0; c < a.c() + b.c(); ++c)
      for (std::int64_t i = 0; i < a.h(); ++i)
        for (std::int64_t j = 0; j < a.w(); ++j)
          r.at(n, c, i, j) = c < a.c() ? a.at(n, c, i, j) : b.at(n, c - a.c(), i, j);
  return r;
}

inline Tensor channels(const Tensor& t, std::int64_t begin, std::int64_t count) {
  Tensor r({t.n(), count, t.h(), t.w()});
  for (std::int64_t n = 0; n < t.n(); ++n)
    for (std::int64_t c = 0; c < count; ++c)
      for (std::int64_t i = 0; i < t.h(); ++i)
        for (std::int64_t j = 0; j < t.w(); ++j) r.at(n, c, i, j) = t.at(n, begin + c, i, j);
  return r;
}

template <class F>
Tensor map2(const Tensor& a, const Tensor& b, F f) {
  Tensor r(a.shape());
  for (std::size_t i = 0; i < r.data().size(); ++i) r.data()[i] = f(a.data()[i], b.data()[i]);
  return r;
}

template <class F>
Tensor map1(const Tensor& a, F f) {
  Tensor r(a.shape());
  for (std::size_t i = 0; i < r.data().size(); ++i) r.data()[i] = f(a.data()[i]);
  return r;
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Softmax of one vector, computed directly from the definition.
inline std::vector<double> softmax(const std::vector<double>& z) {
  double denom = 0.0;
  for (double v : z) denom += std::exp(v);
  std::vector<double> p;
  for (double v : z) p.push_back(std::exp(v) / denom);
  return p;
}

// Per-target-pixel weighted sum over the k x k source neighbourhood.
inline Tensor reassemble(const Tensor& x, const Tensor& kernels, std::int64_t scale,
                         std::int64_t k) {
  const std::int64_t r = k / 2;
  Tensor out({x.n(), x.c(), x.h() * scale, x.w() * scale});
  for (std::int64_t n = 0; n < x.n(); ++n)
    for (std::int64_t c = 0; c < x.c(); ++c)
      for (std::int64_t i = 0; i < out.h(); ++i)
        for (std::int64_t j = 0; j < out.w(); ++j) {
          double acc = 0.0;
          for (std::int64_t a = 0; a < k; ++a)
            for (std::int64_t b = 0; b < k; ++b) {
              const std::int64_t y = i / scale + a - r;
              const std::int64_t xx = j / scale + b - r;
              if (y < 0 || y >= x.h() || xx < 0 || xx >= x.w()) continue;
              acc += kernels.at(n, a * k + b, i, j) * x.at(n, c, y, xx);
            }
          out.at(n, c, i, j) = acc;
        }
  return out;
}

// Block-major channel-to-space: channel (dy*f + dx)*c + k -> (k, f*y+dy, f*x+dx).
inline Tensor pixel_shuffle(const Tensor& t, std::int64_t f) {
  const std::int64_t c = t.c() / (f * f);
  Tensor out({t.n(), c, t.h() * f, t.w() * f});
  for (std::int64_t n = 0; n < t.n(); ++n)
    for (std::int64_t ch = 0; ch < t.c(); ++ch)
      for (std::int64_t y = 0; y < t.h(); ++y)
        for (std::int64_t x = 0; x < t.w(); ++x) {
          const std::int64_t block = ch / c;
          out.at(n, ch % c, y * f + block / f, x * f + block % f) = t.at(n, ch, y, x);
        }
  return out;
}

inline Tensor random_tensor(const Shape& s, std::mt19937_64& g, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(s);
  for (double& v : t.data()) v = d(g);
  return t;
}

}  // namespace oracle

#endif  // LWCONV_TESTS_ORACLES_HPP
