#ifndef LISTEREO_OPS_BASIC_HPP_
#define LISTEREO_OPS_BASIC_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "listereo/tensor.hpp"

// Elementwise primitives, reductions, channel concatenation and the
// channel softmax. Every op follows the same pattern: compute forward
// values, then register a backprop closure that accumulates into the
// parents' grad buffers.

namespace listereo::ops {

namespace detail_ops {

template <class T>
void accumulate(listereo::detail::Node<T>& parent, std::size_t i, T v) {
  parent.grad[i] += v;
}

template <class T>
bool wants_grad(const std::shared_ptr<listereo::detail::Node<T>>& n) {
  return n->requires_grad;
}

}  // namespace detail_ops

template <class T, class FwdFn, class DfFn>
Tensor<T> unary_elementwise(const Tensor<T>& x, FwdFn f, DfFn df) {
  const auto xs = x.values();
  std::vector<T> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i]);
  auto xn = x.node();
  return listereo::detail::make_result<T>(
      x.shape(), std::move(out), {xn}, [xn, df](listereo::detail::Node<T>& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          xn->grad[i] += self.grad[i] * df(xn->values[i]);
      });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_shape(a.shape() == b.shape(), "add: shape mismatch " +
                                          a.shape().str() + " vs " +
                                          b.shape().str());
  const auto av = a.values(), bv = b.values();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  auto an = a.node(), bn = b.node();
  return listereo::detail::make_result<T>(
      a.shape(), std::move(out), {an, bn},
      [an, bn](listereo::detail::Node<T>& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            bn->grad[i] += self.grad[i];
        }
      });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  check_shape(a.shape() == b.shape(), "sub: shape mismatch " +
                                          a.shape().str() + " vs " +
                                          b.shape().str());
  const auto av = a.values(), bv = b.values();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  auto an = a.node(), bn = b.node();
  return listereo::detail::make_result<T>(
      a.shape(), std::move(out), {an, bn},
      [an, bn](listereo::detail::Node<T>& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            bn->grad[i] -= self.grad[i];
        }
      });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_shape(a.shape() == b.shape(), "mul: shape mismatch " +
                                          a.shape().str() + " vs " +
                                          b.shape().str());
  const auto av = a.values(), bv = b.values();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  auto an = a.node(), bn = b.node();
  return listereo::detail::make_result<T>(
      a.shape(), std::move(out), {an, bn},
      [an, bn](listereo::detail::Node<T>& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            an->grad[i] += self.grad[i] * bn->values[i];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            bn->grad[i] += self.grad[i] * an->values[i];
        }
      });
}

template <class T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  check_shape(a.shape() == b.shape(), "div: shape mismatch " +
                                          a.shape().str() + " vs " +
                                          b.shape().str());
  const auto av = a.values(), bv = b.values();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] / bv[i];
  auto an = a.node(), bn = b.node();
  return listereo::detail::make_result<T>(
      a.shape(), std::move(out), {an, bn},
      [an, bn](listereo::detail::Node<T>& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            an->grad[i] += self.grad[i] / bn->values[i];
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const T d = bn->values[i];
            bn->grad[i] -= self.grad[i] * an->values[i] / (d * d);
          }
        }
      });
}

template <class T>
Tensor<T> negate(const Tensor<T>& x) {
  return unary_elementwise(
      x, [](T v) { return -v; }, [](T) { return T(-1); });
}

template <class T>
Tensor<T> abs(const Tensor<T>& x) {
  return unary_elementwise(
      x, [](T v) { return std::abs(v); },
      [](T v) { return v >= T(0) ? T(1) : T(-1); });
}

template <class T>
Tensor<T> exp(const Tensor<T>& x) {
  return unary_elementwise(
      x, [](T v) { return std::exp(v); }, [](T v) { return std::exp(v); });
}

template <class T>
Tensor<T> reciprocal(const Tensor<T>& x) {
  return unary_elementwise(
      x, [](T v) { return T(1) / v; },
      [](T v) { return T(-1) / (v * v); });
}

template <class T>
Tensor<T> scale(const Tensor<T>& x, T a) {
  return unary_elementwise(
      x, [a](T v) { return a * v; }, [a](T) { return a; });
}

template <class T>
Tensor<T> add_scalar(const Tensor<T>& x, T b) {
  return unary_elementwise(
      x, [b](T v) { return v + b; }, [](T) { return T(1); });
}

// max(x, s); at the tie the gradient follows x.
template <class T>
Tensor<T> max_scalar(const Tensor<T>& x, T s) {
  return unary_elementwise(
      x, [s](T v) { return v > s ? v : s; },
      [s](T v) { return v >= s ? T(1) : T(0); });
}

template <class T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
  return unary_elementwise(
      x, [lo, hi](T v) { return std::min(std::max(v, lo), hi); },
      [lo, hi](T v) { return (v >= lo && v <= hi) ? T(1) : T(0); });
}

template <class T>
Tensor<T> leaky_relu(const Tensor<T>& x, T negative_slope = T(0.1)) {
  return unary_elementwise(
      x, [negative_slope](T v) { return v >= T(0) ? v : negative_slope * v; },
      [negative_slope](T v) { return v >= T(0) ? T(1) : negative_slope; });
}

template <class T>
Tensor<T> sum_all(const Tensor<T>& x) {
  const auto xs = x.values();
  T acc = 0;
  for (T v : xs) acc += v;
  auto xn = x.node();
  return listereo::detail::make_result<T>(
      Shape{1, 1, 1, 1}, {acc}, {xn}, [xn](listereo::detail::Node<T>& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const T g = self.grad[0];
        for (auto& gi : xn->grad) gi += g;
      });
}

template <class T>
Tensor<T> mean_all(const Tensor<T>& x) {
  return scale(sum_all(x), T(1) / T(x.size()));
}

// Mean of x over mask>0.5 positions; 0 when the mask is empty. The mask is
// a constant: no gradient flows into it.
template <class T>
Tensor<T> masked_mean(const Tensor<T>& x, const Tensor<T>& mask) {
  check_shape(x.shape() == mask.shape(), "masked_mean: shape mismatch");
  const auto xs = x.values();
  const auto ms = mask.values();
  T acc = 0, count = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (ms[i] > T(0.5)) {
      acc += xs[i];
      count += T(1);
    }
  }
  const T denom = count > T(0) ? count : T(1);
  auto xn = x.node();
  auto mn = mask.node();
  return listereo::detail::make_result<T>(
      Shape{1, 1, 1, 1}, {acc / denom}, {xn},
      [xn, mn, denom](listereo::detail::Node<T>& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const T g = self.grad[0] / denom;
        for (std::size_t i = 0; i < xn->grad.size(); ++i)
          if (mn->values[i] > T(0.5)) xn->grad[i] += g;
      });
}

// Per-pixel mean across channels, (N,C,H,W) -> (N,1,H,W).
template <class T>
Tensor<T> mean_channels(const Tensor<T>& x) {
  const Shape s = x.shape();
  const Shape os{s.n, 1, s.h, s.w};
  std::vector<T> out(std::size_t(os.count()), T(0));
  const T* xv = x.data();
  const std::int64_t plane = std::int64_t(s.h) * s.w;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T* src = xv + (std::int64_t(n) * s.c + c) * plane;
      T* dst = out.data() + std::int64_t(n) * plane;
      for (std::int64_t i = 0; i < plane; ++i) dst[i] += src[i];
    }
  const T inv = T(1) / T(s.c);
  for (auto& v : out) v *= inv;
  auto xn = x.node();
  return listereo::detail::make_result<T>(
      os, std::move(out), {xn}, [xn, s, inv](listereo::detail::Node<T>& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const std::int64_t plane = std::int64_t(s.h) * s.w;
        for (int n = 0; n < s.n; ++n)
          for (int c = 0; c < s.c; ++c) {
            T* dst = xn->grad.data() + (std::int64_t(n) * s.c + c) * plane;
            const T* g = self.grad.data() + std::int64_t(n) * plane;
            for (std::int64_t i = 0; i < plane; ++i) dst[i] += g[i] * inv;
          }
      });
}

template <class T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  check_shape(!parts.empty(), "concat_channels: no inputs");
  const Shape s0 = parts[0].shape();
  int total_c = 0;
  for (const auto& p : parts) {
    const Shape s = p.shape();
    check_shape(s.n == s0.n && s.h == s0.h && s.w == s0.w,
                "concat_channels: spatial/batch mismatch");
    total_c += s.c;
  }
  const Shape os{s0.n, total_c, s0.h, s0.w};
  std::vector<T> out(std::size_t(os.count()));
  const std::int64_t plane = std::int64_t(s0.h) * s0.w;
  std::vector<std::shared_ptr<listereo::detail::Node<T>>> nodes;
  nodes.reserve(parts.size());
  for (const auto& p : parts) nodes.push_back(p.node());
  for (int n = 0; n < os.n; ++n) {
    int coff = 0;
    for (const auto& p : parts) {
      const Shape ps = p.shape();
      const T* src = p.data() + std::int64_t(n) * ps.c * plane;
      T* dst = out.data() + (std::int64_t(n) * os.c + coff) * plane;
      std::copy(src, src + std::int64_t(ps.c) * plane, dst);
      coff += ps.c;
    }
  }
  return listereo::detail::make_result<T>(
      os, std::move(out), nodes, [nodes, os](listereo::detail::Node<T>& self) {
        const std::int64_t plane = std::int64_t(os.h) * os.w;
        for (int n = 0; n < os.n; ++n) {
          int coff = 0;
          for (const auto& pn : nodes) {
            const int pc = pn->shape.c;
            if (pn->requires_grad) {
              pn->ensure_grad();
              const T* g = self.grad.data() + (std::int64_t(n) * os.c + coff) * plane;
              T* dst = pn->grad.data() + std::int64_t(n) * pc * plane;
              for (std::int64_t i = 0; i < std::int64_t(pc) * plane; ++i)
                dst[i] += g[i];
            }
            coff += pc;
          }
        }
      });
}

// Numerically stabilized softmax across the channel axis.
template <class T>
Tensor<T> softmax_channel(const Tensor<T>& x) {
  const Shape s = x.shape();
  std::vector<T> out(std::size_t(s.count()));
  const T* xv = x.data();
  const std::int64_t plane = std::int64_t(s.h) * s.w;
  for (int n = 0; n < s.n; ++n) {
    const T* xb = xv + std::int64_t(n) * s.c * plane;
    T* ob = out.data() + std::int64_t(n) * s.c * plane;
    for (std::int64_t i = 0; i < plane; ++i) {
      T mx = xb[i];
      for (int c = 1; c < s.c; ++c) mx = std::max(mx, xb[c * plane + i]);
      T denom = 0;
      for (int c = 0; c < s.c; ++c) {
        const T e = std::exp(xb[c * plane + i] - mx);
        ob[c * plane + i] = e;
        denom += e;
      }
      const T inv = T(1) / denom;
      for (int c = 0; c < s.c; ++c) ob[c * plane + i] *= inv;
    }
  }
  auto xn = x.node();
  return listereo::detail::make_result<T>(
      s, std::move(out), {xn}, [xn, s](listereo::detail::Node<T>& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const std::int64_t plane = std::int64_t(s.h) * s.w;
        for (int n = 0; n < s.n; ++n) {
          const T* p = self.values.data() + std::int64_t(n) * s.c * plane;
          const T* g = self.grad.data() + std::int64_t(n) * s.c * plane;
          T* dst = xn->grad.data() + std::int64_t(n) * s.c * plane;
          for (std::int64_t i = 0; i < plane; ++i) {
            T dot = 0;
            for (int c = 0; c < s.c; ++c)
              dot += p[c * plane + i] * g[c * plane + i];
            for (int c = 0; c < s.c; ++c)
              dst[c * plane + i] +=
                  p[c * plane + i] * (g[c * plane + i] - dot);
          }
        }
      });
}

}  // namespace listereo::ops

#endif  // LISTEREO_OPS_BASIC_HPP_
