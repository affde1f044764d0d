#ifndef LISTEREO_OPS_SPATIAL_HPP_
#define LISTEREO_OPS_SPATIAL_HPP_

#include <algorithm>
#include <cmath>
#include <vector>

#include "listereo/tensor.hpp"

namespace listereo::ops {

// Bilinear resize, align-corners-false convention:
// src = (dst + 0.5) * (in/out) - 0.5, clamped to the image.
template <class T>
Tensor<T> bilinear_resize(const Tensor<T>& input, int out_h, int out_w) {
  const Shape is = input.shape();
  check_shape(out_h >= 1 && out_w >= 1, "bilinear_resize: bad output size");
  if (out_h == is.h && out_w == is.w) {
    // Identity resize still records a pass-through op.
    auto xn = input.node();
    std::vector<T> out(input.values().begin(), input.values().end());
    return listereo::detail::make_result<T>(
        is, std::move(out), {xn}, [xn](listereo::detail::Node<T>& self) {
          if (!xn->requires_grad) return;
          xn->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            xn->grad[i] += self.grad[i];
        });
  }
  const Shape os{is.n, is.c, out_h, out_w};
  const double sy = double(is.h) / out_h;
  const double sx = double(is.w) / out_w;

  struct Tap {
    int i0, i1;
    T w1;
  };
  std::vector<Tap> ytap(out_h), xtap(out_w);
  for (int oy = 0; oy < out_h; ++oy) {
    double src = (oy + 0.5) * sy - 0.5;
    src = std::min(std::max(src, 0.0), double(is.h - 1));
    const int i0 = int(std::floor(src));
    ytap[oy] = {i0, std::min(i0 + 1, is.h - 1), T(src - i0)};
  }
  for (int ox = 0; ox < out_w; ++ox) {
    double src = (ox + 0.5) * sx - 0.5;
    src = std::min(std::max(src, 0.0), double(is.w - 1));
    const int i0 = int(std::floor(src));
    xtap[ox] = {i0, std::min(i0 + 1, is.w - 1), T(src - i0)};
  }

  std::vector<T> out(std::size_t(os.count()));
  for (int n = 0; n < is.n; ++n)
    for (int c = 0; c < is.c; ++c) {
      const T* src = input.data() + (std::int64_t(n) * is.c + c) *
                                        std::int64_t(is.h) * is.w;
      T* dst = out.data() + (std::int64_t(n) * os.c + c) *
                                std::int64_t(out_h) * out_w;
      for (int oy = 0; oy < out_h; ++oy) {
        const auto& ty = ytap[oy];
        const T* r0 = src + std::int64_t(ty.i0) * is.w;
        const T* r1 = src + std::int64_t(ty.i1) * is.w;
        for (int ox = 0; ox < out_w; ++ox) {
          const auto& tx = xtap[ox];
          const T top = r0[tx.i0] * (T(1) - tx.w1) + r0[tx.i1] * tx.w1;
          const T bot = r1[tx.i0] * (T(1) - tx.w1) + r1[tx.i1] * tx.w1;
          dst[std::int64_t(oy) * out_w + ox] =
              top * (T(1) - ty.w1) + bot * ty.w1;
        }
      }
    }
  auto xn = input.node();
  return listereo::detail::make_result<T>(
      os, std::move(out), {xn},
      [xn, is, os, ytap, xtap](listereo::detail::Node<T>& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (int n = 0; n < is.n; ++n)
          for (int c = 0; c < is.c; ++c) {
            T* dst = xn->grad.data() + (std::int64_t(n) * is.c + c) *
                                           std::int64_t(is.h) * is.w;
            const T* g = self.grad.data() + (std::int64_t(n) * os.c + c) *
                                                std::int64_t(os.h) * os.w;
            for (int oy = 0; oy < os.h; ++oy) {
              const auto& ty = ytap[oy];
              for (int ox = 0; ox < os.w; ++ox) {
                const auto& tx = xtap[ox];
                const T gv = g[std::int64_t(oy) * os.w + ox];
                dst[std::int64_t(ty.i0) * is.w + tx.i0] +=
                    gv * (T(1) - ty.w1) * (T(1) - tx.w1);
                dst[std::int64_t(ty.i0) * is.w + tx.i1] +=
                    gv * (T(1) - ty.w1) * tx.w1;
                dst[std::int64_t(ty.i1) * is.w + tx.i0] +=
                    gv * ty.w1 * (T(1) - tx.w1);
                dst[std::int64_t(ty.i1) * is.w + tx.i1] +=
                    gv * ty.w1 * tx.w1;
              }
            }
          }
      });
}

// 1-D horizontal bilinear sampling at x - disparity(x,y). Coordinates
// outside [0, W-1] produce 0 with zero gradient (both inputs).
template <class T>
Tensor<T> sample_horizontal(const Tensor<T>& input, const Tensor<T>& disparity) {
  const Shape is = input.shape();
  const Shape ds = disparity.shape();
  check_shape(ds.n == is.n && ds.c == 1 && ds.h == is.h && ds.w == is.w,
              "sample_horizontal: disparity must be (n,1,h,w) matching input");
  std::vector<T> out(std::size_t(is.count()), T(0));
  const T* dv = disparity.data();
  for (int n = 0; n < is.n; ++n) {
    const T* dplane = dv + std::int64_t(n) * is.h * is.w;
    for (int c = 0; c < is.c; ++c) {
      const T* src = input.data() + (std::int64_t(n) * is.c + c) *
                                        std::int64_t(is.h) * is.w;
      T* dst = out.data() + (std::int64_t(n) * is.c + c) *
                                std::int64_t(is.h) * is.w;
      for (int y = 0; y < is.h; ++y) {
        const T* row = src + std::int64_t(y) * is.w;
        for (int x = 0; x < is.w; ++x) {
          const T xs = T(x) - dplane[std::int64_t(y) * is.w + x];
          if (!(xs >= T(0) && xs <= T(is.w - 1))) continue;
          const int x0 = int(std::floor(double(xs)));
          const T w1 = xs - T(x0);
          const int x1 = std::min(x0 + 1, is.w - 1);
          dst[std::int64_t(y) * is.w + x] =
              row[x0] * (T(1) - w1) + row[x1] * w1;
        }
      }
    }
  }
  auto xn = input.node();
  auto dn = disparity.node();
  return listereo::detail::make_result<T>(
      is, std::move(out), {xn, dn},
      [xn, dn, is](listereo::detail::Node<T>& self) {
        const bool want_x = xn->requires_grad;
        const bool want_d = dn->requires_grad;
        if (!want_x && !want_d) return;
        if (want_x) xn->ensure_grad();
        if (want_d) dn->ensure_grad();
        for (int n = 0; n < is.n; ++n) {
          const T* dplane = dn->values.data() + std::int64_t(n) * is.h * is.w;
          T* dgrad = want_d ? dn->grad.data() + std::int64_t(n) * is.h * is.w
                            : nullptr;
          for (int c = 0; c < is.c; ++c) {
            const T* src = xn->values.data() + (std::int64_t(n) * is.c + c) *
                                                   std::int64_t(is.h) * is.w;
            T* xg = want_x ? xn->grad.data() + (std::int64_t(n) * is.c + c) *
                                                   std::int64_t(is.h) * is.w
                           : nullptr;
            const T* g = self.grad.data() + (std::int64_t(n) * is.c + c) *
                                                std::int64_t(is.h) * is.w;
            for (int y = 0; y < is.h; ++y) {
              for (int x = 0; x < is.w; ++x) {
                const std::int64_t i = std::int64_t(y) * is.w + x;
                const T xs = T(x) - dplane[i];
                if (!(xs >= T(0) && xs <= T(is.w - 1))) continue;
                const T gv = g[i];
                if (gv == T(0)) continue;
                const int x0 = int(std::floor(double(xs)));
                const T w1 = xs - T(x0);
                const int x1 = std::min(x0 + 1, is.w - 1);
                if (want_x) {
                  xg[std::int64_t(y) * is.w + x0] += gv * (T(1) - w1);
                  xg[std::int64_t(y) * is.w + x1] += gv * w1;
                }
                if (want_d) {
                  const T slope = src[std::int64_t(y) * is.w + x1] -
                                  src[std::int64_t(y) * is.w + x0];
                  dgrad[i] -= gv * slope;
                }
              }
            }
          }
        }
      });
}

// Three-tap second derivative along x: v(x-1) - 2 v(x) + v(x+1), zero at
// the left/right borders.
template <class T>
Tensor<T> second_diff_x(const Tensor<T>& input) {
  const Shape is = input.shape();
  std::vector<T> out(std::size_t(is.count()), T(0));
  for (int n = 0; n < is.n; ++n)
    for (int c = 0; c < is.c; ++c) {
      const T* src = input.data() + (std::int64_t(n) * is.c + c) *
                                        std::int64_t(is.h) * is.w;
      T* dst = out.data() + (std::int64_t(n) * is.c + c) *
                                std::int64_t(is.h) * is.w;
      for (int y = 0; y < is.h; ++y)
        for (int x = 1; x + 1 < is.w; ++x) {
          const std::int64_t i = std::int64_t(y) * is.w + x;
          dst[i] = src[i - 1] - T(2) * src[i] + src[i + 1];
        }
    }
  auto xn = input.node();
  return listereo::detail::make_result<T>(
      is, std::move(out), {xn}, [xn, is](listereo::detail::Node<T>& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (int n = 0; n < is.n; ++n)
          for (int c = 0; c < is.c; ++c) {
            T* dst = xn->grad.data() + (std::int64_t(n) * is.c + c) *
                                           std::int64_t(is.h) * is.w;
            const T* g = self.grad.data() + (std::int64_t(n) * is.c + c) *
                                                std::int64_t(is.h) * is.w;
            for (int y = 0; y < is.h; ++y)
              for (int x = 1; x + 1 < is.w; ++x) {
                const std::int64_t i = std::int64_t(y) * is.w + x;
                const T gv = g[i];
                dst[i - 1] += gv;
                dst[i] -= T(2) * gv;
                dst[i + 1] += gv;
              }
          }
      });
}

// Same stencil along y, zero at the top/bottom borders.
template <class T>
Tensor<T> second_diff_y(const Tensor<T>& input) {
  const Shape is = input.shape();
  std::vector<T> out(std::size_t(is.count()), T(0));
  for (int n = 0; n < is.n; ++n)
    for (int c = 0; c < is.c; ++c) {
      const T* src = input.data() + (std::int64_t(n) * is.c + c) *
                                        std::int64_t(is.h) * is.w;
      T* dst = out.data() + (std::int64_t(n) * is.c + c) *
                                std::int64_t(is.h) * is.w;
      for (int y = 1; y + 1 < is.h; ++y)
        for (int x = 0; x < is.w; ++x) {
          const std::int64_t i = std::int64_t(y) * is.w + x;
          dst[i] = src[i - is.w] - T(2) * src[i] + src[i + is.w];
        }
    }
  auto xn = input.node();
  return listereo::detail::make_result<T>(
      is, std::move(out), {xn}, [xn, is](listereo::detail::Node<T>& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (int n = 0; n < is.n; ++n)
          for (int c = 0; c < is.c; ++c) {
            T* dst = xn->grad.data() + (std::int64_t(n) * is.c + c) *
                                           std::int64_t(is.h) * is.w;
            const T* g = self.grad.data() + (std::int64_t(n) * is.c + c) *
                                                std::int64_t(is.h) * is.w;
            for (int y = 1; y + 1 < is.h; ++y)
              for (int x = 0; x < is.w; ++x) {
                const std::int64_t i = std::int64_t(y) * is.w + x;
                const T gv = g[i];
                dst[i - is.w] += gv;
                dst[i] -= T(2) * gv;
                dst[i + is.w] += gv;
              }
          }
      });
}

}  // namespace listereo::ops

#endif  // LISTEREO_OPS_SPATIAL_HPP_
