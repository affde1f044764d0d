#ifndef LISTEREO_OPS_CONV_HPP_
#define LISTEREO_OPS_CONV_HPP_

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "listereo/blas.hpp"
#include "listereo/tensor.hpp"

namespace listereo::ops {

namespace detail_ops {

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// Unrolls one sample into (IC*K*K) x (OH*OW), zero outside the image.
template <class T>
void im2col(const T* img, int ic, int h, int w, int k, int stride, int pad,
            int oh, int ow, T* col) {
  for (int c = 0; c < ic; ++c) {
    const T* plane = img + std::int64_t(c) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = col + (std::int64_t(c) * k * k + ky * k + kx) *
                           (std::int64_t(oh) * ow);
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + ow, T(0));
            dst += ow;
            continue;
          }
          const T* row = plane + std::int64_t(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            *dst++ = (ix >= 0 && ix < w) ? row[ix] : T(0);
          }
        }
      }
    }
  }
}

// Adds the columns back into one sample image (adjoint of im2col).
template <class T>
void col2im_add(const T* col, int ic, int h, int w, int k, int stride, int pad,
                int oh, int ow, T* img) {
  for (int c = 0; c < ic; ++c) {
    T* plane = img + std::int64_t(c) * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src = col + (std::int64_t(c) * k * k + ky * k + kx) *
                                 (std::int64_t(oh) * ow);
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            src += ow;
            continue;
          }
          T* row = plane + std::int64_t(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) row[ix] += src[ox];
            ++src;
          }
        }
      }
    }
  }
}

}  // namespace detail_ops

// Cross-correlation (no kernel flip). weight (OC,IC,K,K), optional bias
// (1,OC,1,1). Output spatial size floor((H+2p-k)/stride)+1.
template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight,
                 const Tensor<T>& bias, int stride, int padding) {
  const Shape is = input.shape();
  const Shape ws = weight.shape();
  check_shape(ws.h == ws.w, "conv2d: kernel must be square");
  check_shape(is.c == ws.c, "conv2d: input channels " + std::to_string(is.c) +
                                " do not match weight in_c " +
                                std::to_string(ws.c));
  check_shape(stride >= 1 && padding >= 0, "conv2d: bad stride/padding");
  const bool has_bias = bias.defined();
  if (has_bias)
    check_shape(bias.shape() == Shape{1, ws.n, 1, 1},
                "conv2d: bias shape must be (1,out_c,1,1)");
  const int k = ws.h;
  const int oh = detail_ops::conv_out_dim(is.h, k, stride, padding);
  const int ow = detail_ops::conv_out_dim(is.w, k, stride, padding);
  check_shape(oh >= 1 && ow >= 1, "conv2d: empty output");
  const Shape os{is.n, ws.n, oh, ow};

  const std::int64_t col_rows = std::int64_t(is.c) * k * k;
  const std::int64_t col_cols = std::int64_t(oh) * ow;
  std::vector<T> col(std::size_t(col_rows * col_cols));
  std::vector<T> out(std::size_t(os.count()));
  threading::init();
  for (int n = 0; n < is.n; ++n) {
    detail_ops::im2col(input.data() + std::int64_t(n) * is.c * is.h * is.w,
                       is.c, is.h, is.w, k, stride, padding, oh, ow,
                       col.data());
    detail::gemm(false, false, ws.n, int(col_cols), int(col_rows), T(1),
                 weight.data(), int(col_rows), col.data(), int(col_cols),
                 T(0), out.data() + std::int64_t(n) * ws.n * col_cols,
                 int(col_cols));
  }
  if (has_bias) {
    const T* bv = bias.data();
    for (int n = 0; n < os.n; ++n)
      for (int c = 0; c < os.c; ++c) {
        T* dst = out.data() + (std::int64_t(n) * os.c + c) * col_cols;
        for (std::int64_t i = 0; i < col_cols; ++i) dst[i] += bv[c];
      }
  }

  auto xn = input.node();
  auto wn = weight.node();
  std::vector<std::shared_ptr<listereo::detail::Node<T>>> parents{xn, wn};
  std::shared_ptr<listereo::detail::Node<T>> bn;
  if (has_bias) {
    bn = bias.node();
    parents.push_back(bn);
  }
  return listereo::detail::make_result<T>(
      os, std::move(out), std::move(parents),
      [xn, wn, bn, is, ws, os, stride, padding,
       k](listereo::detail::Node<T>& self) {
        const std::int64_t col_rows = std::int64_t(is.c) * k * k;
        const std::int64_t col_cols = std::int64_t(os.h) * os.w;
        if (bn && bn->requires_grad) {
          bn->ensure_grad();
          for (int n = 0; n < os.n; ++n)
            for (int c = 0; c < os.c; ++c) {
              const T* g = self.grad.data() +
                           (std::int64_t(n) * os.c + c) * col_cols;
              T acc = 0;
              for (std::int64_t i = 0; i < col_cols; ++i) acc += g[i];
              bn->grad[c] += acc;
            }
        }
        std::vector<T> col(std::size_t(col_rows * col_cols));
        if (wn->requires_grad) {
          wn->ensure_grad();
          std::vector<T> wacc(wn->grad.size(), T(0));
          for (int n = 0; n < is.n; ++n) {
            detail_ops::im2col(
                xn->values.data() + std::int64_t(n) * is.c * is.h * is.w,
                is.c, is.h, is.w, k, stride, padding, os.h, os.w, col.data());
            detail::gemm(false, true, ws.n, int(col_rows), int(col_cols),
                         T(1),
                         self.grad.data() + std::int64_t(n) * ws.n * col_cols,
                         int(col_cols), col.data(), int(col_cols), T(1),
                         wacc.data(), int(col_rows));
          }
          for (std::size_t i = 0; i < wacc.size(); ++i) wn->grad[i] += wacc[i];
        }
        if (xn->requires_grad) {
          xn->ensure_grad();
          std::vector<T> gcol(std::size_t(col_rows * col_cols));
          for (int n = 0; n < is.n; ++n) {
            detail::gemm(true, false, int(col_rows), int(col_cols), ws.n,
                         T(1), wn->values.data(), int(col_rows),
                         self.grad.data() + std::int64_t(n) * ws.n * col_cols,
                         int(col_cols), T(0), gcol.data(), int(col_cols));
            detail_ops::col2im_add(
                gcol.data(), is.c, is.h, is.w, k, stride, padding, os.h, os.w,
                xn->grad.data() + std::int64_t(n) * is.c * is.h * is.w);
          }
        }
      });
}

template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, int stride,
                 int padding) {
  return conv2d(input, weight, Tensor<T>(), stride, padding);
}

// Sparsity-invariant convolution: the masked sum is normalized by the
// valid count in each window, so values at mask=0 pixels never reach the
// output. Returns the output and the max-pooled mask.
template <class T>
std::pair<Tensor<T>, Tensor<T>> sparse_conv2d(const Tensor<T>& input,
                                              const Tensor<T>& mask,
                                              const Tensor<T>& weight,
                                              const Tensor<T>& bias,
                                              int stride, int padding) {
  const Shape is = input.shape();
  const Shape ms = mask.shape();
  const Shape ws = weight.shape();
  check_shape(ms.n == is.n && ms.c == 1 && ms.h == is.h && ms.w == is.w,
              "sparse_conv2d: mask must be (n,1,h,w) matching the input");
  check_shape(ws.h == ws.w && is.c == ws.c, "sparse_conv2d: weight shape");
  const bool has_bias = bias.defined();
  if (has_bias)
    check_shape(bias.shape() == Shape{1, ws.n, 1, 1},
                "sparse_conv2d: bias shape must be (1,out_c,1,1)");
  const int k = ws.h;
  const int oh = detail_ops::conv_out_dim(is.h, k, stride, padding);
  const int ow = detail_ops::conv_out_dim(is.w, k, stride, padding);
  check_shape(oh >= 1 && ow >= 1, "sparse_conv2d: empty output");
  const Shape os{is.n, ws.n, oh, ow};
  const Shape oms{is.n, 1, oh, ow};
  constexpr T kEps = T(1e-8);

  std::vector<T> out(std::size_t(os.count()), T(0));
  std::vector<T> out_mask(std::size_t(oms.count()), T(0));
  std::vector<T> denom(std::size_t(oms.count()), T(0));
  const T* xv = input.data();
  const T* mv = mask.data();
  const T* wv = weight.data();
  for (int n = 0; n < is.n; ++n) {
    const T* mplane = mv + std::int64_t(n) * is.h * is.w;
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        T cnt = 0, mmax = 0;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride - padding + ky;
          if (iy < 0 || iy >= is.h) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride - padding + kx;
            if (ix < 0 || ix >= is.w) continue;
            const T m = mplane[std::int64_t(iy) * is.w + ix];
            cnt += m;
            mmax = std::max(mmax, m);
          }
        }
        const std::int64_t oi = (std::int64_t(n) * oh + oy) * ow + ox;
        denom[oi] = std::max(cnt, kEps);
        out_mask[oi] = mmax;
      }
    for (int oc = 0; oc < ws.n; ++oc) {
      const T b = has_bias ? bias.data()[oc] : T(0);
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          T acc = 0;
          for (int ic = 0; ic < is.c; ++ic) {
            const T* plane = xv + (std::int64_t(n) * is.c + ic) * is.h * is.w;
            const T* wk = wv + ((std::int64_t(oc) * is.c + ic) * k) * k;
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * stride - padding + ky;
              if (iy < 0 || iy >= is.h) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * stride - padding + kx;
                if (ix < 0 || ix >= is.w) continue;
                const T m = mplane[std::int64_t(iy) * is.w + ix];
                if (m > T(0))
                  acc += wk[ky * k + kx] * plane[std::int64_t(iy) * is.w + ix] * m;
              }
            }
          }
          const std::int64_t oi = (std::int64_t(n) * oh + oy) * ow + ox;
          out[(std::int64_t(n) * os.c + oc) * oh * ow + std::int64_t(oy) * ow +
              ox] = acc / denom[oi] + b;
        }
    }
  }

  auto xn = input.node();
  auto mn = mask.node();
  auto wn = weight.node();
  std::vector<std::shared_ptr<listereo::detail::Node<T>>> parents{xn, wn};
  std::shared_ptr<listereo::detail::Node<T>> bnode;
  if (has_bias) {
    bnode = bias.node();
    parents.push_back(bnode);
  }
  auto denom_shared = std::make_shared<std::vector<T>>(std::move(denom));
  Tensor<T> out_t = listereo::detail::make_result<T>(
      os, std::move(out), std::move(parents),
      [xn, mn, wn, bnode, is, ws, os, stride, padding, k,
       denom_shared](listereo::detail::Node<T>& self) {
        const T* mv = mn->values.data();
        const T* dv = denom_shared->data();
        if (bnode && bnode->requires_grad) {
          bnode->ensure_grad();
          for (int n = 0; n < os.n; ++n)
            for (int oc = 0; oc < os.c; ++oc) {
              const T* g = self.grad.data() +
                           (std::int64_t(n) * os.c + oc) * os.h * os.w;
              T acc = 0;
              for (std::int64_t i = 0; i < std::int64_t(os.h) * os.w; ++i)
                acc += g[i];
              bnode->grad[oc] += acc;
            }
        }
        const bool want_x = xn->requires_grad;
        const bool want_w = wn->requires_grad;
        if (!want_x && !want_w) return;
        if (want_x) xn->ensure_grad();
        if (want_w) wn->ensure_grad();
        for (int n = 0; n < os.n; ++n) {
          const T* mplane = mv + std::int64_t(n) * is.h * is.w;
          for (int oc = 0; oc < os.c; ++oc) {
            const T* g = self.grad.data() +
                         (std::int64_t(n) * os.c + oc) * os.h * os.w;
            for (int oy = 0; oy < os.h; ++oy)
              for (int ox = 0; ox < os.w; ++ox) {
                const T gv = g[std::int64_t(oy) * os.w + ox];
                if (gv == T(0)) continue;
                const T inv =
                    gv / dv[(std::int64_t(n) * os.h + oy) * os.w + ox];
                for (int ic = 0; ic < is.c; ++ic) {
                  const std::int64_t xoff =
                      (std::int64_t(n) * is.c + ic) * is.h * is.w;
                  const T* wk = wn->values.data() +
                                ((std::int64_t(oc) * is.c + ic) * k) * k;
                  T* wg = want_w ? wn->grad.data() +
                                       ((std::int64_t(oc) * is.c + ic) * k) * k
                                 : nullptr;
                  for (int ky = 0; ky < k; ++ky) {
                    const int iy = oy * stride - padding + ky;
                    if (iy < 0 || iy >= is.h) continue;
                    for (int kx = 0; kx < k; ++kx) {
                      const int ix = ox * stride - padding + kx;
                      if (ix < 0 || ix >= is.w) continue;
                      const T m = mplane[std::int64_t(iy) * is.w + ix];
                      if (m <= T(0)) continue;
                      const std::int64_t xi = xoff + std::int64_t(iy) * is.w + ix;
                      if (want_x)
                        xn->grad[xi] += inv * m * wk[ky * k + kx];
                      if (want_w)
                        wg[ky * k + kx] += inv * m * xn->values[xi];
                    }
                  }
                }
              }
          }
        }
      });
  Tensor<T> mask_t = Tensor<T>::from_data(oms, std::move(out_mask));
  return {out_t, mask_t};
}

// Mutable per-layer running statistics used in eval mode.
template <class T>
struct BatchNormState {
  std::vector<T> running_mean;
  std::vector<T> running_var;

  explicit BatchNormState(int channels = 0)
      : running_mean(channels, T(0)), running_var(channels, T(1)) {}
};

template <class T>
Tensor<T> batch_norm(const Tensor<T>& input, const Tensor<T>& gamma,
                     const Tensor<T>& beta, BatchNormState<T>* state,
                     bool training, T momentum = T(0.9), T eps = T(1e-5)) {
  const Shape is = input.shape();
  check_shape(gamma.shape() == Shape{1, is.c, 1, 1} &&
                  beta.shape() == Shape{1, is.c, 1, 1},
              "batch_norm: gamma/beta must be (1,c,1,1)");
  const std::int64_t plane = std::int64_t(is.h) * is.w;
  const std::int64_t m = std::int64_t(is.n) * plane;
  std::vector<T> mean(is.c), inv_std(is.c);
  if (training) {
    check_numeric(m > 1,
                  "batch_norm: degenerate statistics (one value per channel "
                  "in training mode)");
    for (int c = 0; c < is.c; ++c) {
      T acc = 0;
      for (int n = 0; n < is.n; ++n) {
        const T* src = input.data() + (std::int64_t(n) * is.c + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) acc += src[i];
      }
      const T mu = acc / T(m);
      T vacc = 0;
      for (int n = 0; n < is.n; ++n) {
        const T* src = input.data() + (std::int64_t(n) * is.c + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
          const T d = src[i] - mu;
          vacc += d * d;
        }
      }
      const T var = vacc / T(m);
      mean[c] = mu;
      inv_std[c] = T(1) / std::sqrt(var + eps);
      if (state) {
        state->running_mean[c] = momentum * state->running_mean[c] +
                                 (T(1) - momentum) * mu;
        state->running_var[c] =
            momentum * state->running_var[c] + (T(1) - momentum) * var;
      }
    }
  } else {
    check_shape(state != nullptr && int(state->running_mean.size()) == is.c,
                "batch_norm: eval mode requires running statistics");
    for (int c = 0; c < is.c; ++c) {
      mean[c] = state->running_mean[c];
      inv_std[c] = T(1) / std::sqrt(state->running_var[c] + eps);
    }
  }

  std::vector<T> out(std::size_t(is.count()));
  const T* gv = gamma.data();
  const T* bv = beta.data();
  for (int n = 0; n < is.n; ++n)
    for (int c = 0; c < is.c; ++c) {
      const T* src = input.data() + (std::int64_t(n) * is.c + c) * plane;
      T* dst = out.data() + (std::int64_t(n) * is.c + c) * plane;
      const T mu = mean[c], istd = inv_std[c], g = gv[c], b = bv[c];
      for (std::int64_t i = 0; i < plane; ++i)
        dst[i] = g * (src[i] - mu) * istd + b;
    }

  auto xn = input.node();
  auto gn = gamma.node();
  auto bn = beta.node();
  return listereo::detail::make_result<T>(
      is, std::move(out), {xn, gn, bn},
      [xn, gn, bn, is, mean, inv_std, training,
       m](listereo::detail::Node<T>& self) {
        const std::int64_t plane = std::int64_t(is.h) * is.w;
        for (int c = 0; c < is.c; ++c) {
          const T mu = mean[c], istd = inv_std[c];
          T sum_g = 0, sum_gx = 0;
          for (int n = 0; n < is.n; ++n) {
            const T* g = self.grad.data() + (std::int64_t(n) * is.c + c) * plane;
            const T* x = xn->values.data() + (std::int64_t(n) * is.c + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
              sum_g += g[i];
              sum_gx += g[i] * (x[i] - mu) * istd;
            }
          }
          if (gn->requires_grad) {
            gn->ensure_grad();
            gn->grad[c] += sum_gx;
          }
          if (bn->requires_grad) {
            bn->ensure_grad();
            bn->grad[c] += sum_g;
          }
          if (xn->requires_grad) {
            xn->ensure_grad();
            const T gamma_c = gn->values[c];
            if (training) {
              const T inv_m = T(1) / T(m);
              for (int n = 0; n < is.n; ++n) {
                const T* g = self.grad.data() + (std::int64_t(n) * is.c + c) * plane;
                const T* x = xn->values.data() + (std::int64_t(n) * is.c + c) * plane;
                T* dst = xn->grad.data() + (std::int64_t(n) * is.c + c) * plane;
                for (std::int64_t i = 0; i < plane; ++i) {
                  const T xhat = (x[i] - mu) * istd;
                  dst[i] += gamma_c * istd *
                            (g[i] - sum_g * inv_m - xhat * sum_gx * inv_m);
                }
              }
            } else {
              for (int n = 0; n < is.n; ++n) {
                const T* g = self.grad.data() + (std::int64_t(n) * is.c + c) * plane;
                T* dst = xn->grad.data() + (std::int64_t(n) * is.c + c) * plane;
                for (std::int64_t i = 0; i < plane; ++i)
                  dst[i] += g[i] * gamma_c * istd;
              }
            }
          }
        }
      });
}

// Average pooling; padded positions are excluded from the divisor.
template <class T>
Tensor<T> avg_pool2d(const Tensor<T>& input, int k, int stride, int padding) {
  const Shape is = input.shape();
  const int oh = detail_ops::conv_out_dim(is.h, k, stride, padding);
  const int ow = detail_ops::conv_out_dim(is.w, k, stride, padding);
  check_shape(oh >= 1 && ow >= 1, "avg_pool2d: empty output");
  const Shape os{is.n, is.c, oh, ow};
  std::vector<T> out(std::size_t(os.count()));
  for (int n = 0; n < is.n; ++n)
    for (int c = 0; c < is.c; ++c) {
      const T* src = input.data() + (std::int64_t(n) * is.c + c) *
                                        std::int64_t(is.h) * is.w;
      T* dst = out.data() + (std::int64_t(n) * os.c + c) *
                                std::int64_t(oh) * ow;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          T acc = 0;
          int cnt = 0;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride - padding + ky;
            if (iy < 0 || iy >= is.h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride - padding + kx;
              if (ix < 0 || ix >= is.w) continue;
              acc += src[std::int64_t(iy) * is.w + ix];
              ++cnt;
            }
          }
          dst[std::int64_t(oy) * ow + ox] = acc / T(cnt);
        }
    }
  auto xn = input.node();
  return listereo::detail::make_result<T>(
      os, std::move(out), {xn},
      [xn, is, os, k, stride, padding](listereo::detail::Node<T>& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (int n = 0; n < is.n; ++n)
          for (int c = 0; c < is.c; ++c) {
            T* dst = xn->grad.data() + (std::int64_t(n) * is.c + c) *
                                           std::int64_t(is.h) * is.w;
            const T* g = self.grad.data() + (std::int64_t(n) * os.c + c) *
                                                std::int64_t(os.h) * os.w;
            for (int oy = 0; oy < os.h; ++oy)
              for (int ox = 0; ox < os.w; ++ox) {
                int cnt = 0;
                for (int ky = 0; ky < k; ++ky) {
                  const int iy = oy * stride - padding + ky;
                  if (iy < 0 || iy >= is.h) continue;
                  for (int kx = 0; kx < k; ++kx) {
                    const int ix = ox * stride - padding + kx;
                    if (ix >= 0 && ix < is.w) ++cnt;
                  }
                }
                const T gv = g[std::int64_t(oy) * os.w + ox] / T(cnt);
                for (int ky = 0; ky < k; ++ky) {
                  const int iy = oy * stride - padding + ky;
                  if (iy < 0 || iy >= is.h) continue;
                  for (int kx = 0; kx < k; ++kx) {
                    const int ix = ox * stride - padding + kx;
                    if (ix >= 0 && ix < is.w)
                      dst[std::int64_t(iy) * is.w + ix] += gv;
                  }
                }
              }
          }
      });
}

// Adaptive average pooling onto an out_h x out_w grid (PSP bins).
template <class T>
Tensor<T> adaptive_avg_pool2d(const Tensor<T>& input, int out_h, int out_w) {
  const Shape is = input.shape();
  check_shape(out_h >= 1 && out_w >= 1 && out_h <= is.h && out_w <= is.w,
              "adaptive_avg_pool2d: bad output size");
  const Shape os{is.n, is.c, out_h, out_w};
  auto seg_start = [](int i, int in, int out) { return (i * in) / out; };
  auto seg_end = [](int i, int in, int out) {
    return ((i + 1) * in + out - 1) / out;
  };
  std::vector<T> out(std::size_t(os.count()));
  for (int n = 0; n < is.n; ++n)
    for (int c = 0; c < is.c; ++c) {
      const T* src = input.data() + (std::int64_t(n) * is.c + c) *
                                        std::int64_t(is.h) * is.w;
      T* dst = out.data() + (std::int64_t(n) * os.c + c) *
                                std::int64_t(out_h) * out_w;
      for (int oy = 0; oy < out_h; ++oy) {
        const int y0 = seg_start(oy, is.h, out_h), y1 = seg_end(oy, is.h, out_h);
        for (int ox = 0; ox < out_w; ++ox) {
          const int x0 = seg_start(ox, is.w, out_w), x1 = seg_end(ox, is.w, out_w);
          T acc = 0;
          for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) acc += src[std::int64_t(y) * is.w + x];
          dst[std::int64_t(oy) * out_w + ox] =
              acc / T((y1 - y0) * (x1 - x0));
        }
      }
    }
  auto xn = input.node();
  return listereo::detail::make_result<T>(
      os, std::move(out), {xn},
      [xn, is, os](listereo::detail::Node<T>& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        auto seg_start = [](int i, int in, int out) { return (i * in) / out; };
        auto seg_end = [](int i, int in, int out) {
          return ((i + 1) * in + out - 1) / out;
        };
        for (int n = 0; n < is.n; ++n)
          for (int c = 0; c < is.c; ++c) {
            T* dst = xn->grad.data() + (std::int64_t(n) * is.c + c) *
                                           std::int64_t(is.h) * is.w;
            const T* g = self.grad.data() + (std::int64_t(n) * os.c + c) *
                                                std::int64_t(os.h) * os.w;
            for (int oy = 0; oy < os.h; ++oy) {
              const int y0 = seg_start(oy, is.h, os.h), y1 = seg_end(oy, is.h, os.h);
              for (int ox = 0; ox < os.w; ++ox) {
                const int x0 = seg_start(ox, is.w, os.w), x1 = seg_end(ox, is.w, os.w);
                const T gv = g[std::int64_t(oy) * os.w + ox] /
                             T((y1 - y0) * (x1 - x0));
                for (int y = y0; y < y1; ++y)
                  for (int x = x0; x < x1; ++x)
                    dst[std::int64_t(y) * is.w + x] += gv;
              }
            }
          }
      });
}

// Max pooling, mask-propagation path only: not differentiated.
template <class T>
Tensor<T> max_pool2d(const Tensor<T>& input, int k, int stride, int padding) {
  const Shape is = input.shape();
  const int oh = detail_ops::conv_out_dim(is.h, k, stride, padding);
  const int ow = detail_ops::conv_out_dim(is.w, k, stride, padding);
  check_shape(oh >= 1 && ow >= 1, "max_pool2d: empty output");
  const Shape os{is.n, is.c, oh, ow};
  std::vector<T> out(std::size_t(os.count()));
  for (int n = 0; n < is.n; ++n)
    for (int c = 0; c < is.c; ++c) {
      const T* src = input.data() + (std::int64_t(n) * is.c + c) *
                                        std::int64_t(is.h) * is.w;
      T* dst = out.data() + (std::int64_t(n) * os.c + c) *
                                std::int64_t(oh) * ow;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          bool any = false;
          T best = 0;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride - padding + ky;
            if (iy < 0 || iy >= is.h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride - padding + kx;
              if (ix < 0 || ix >= is.w) continue;
              const T v = src[std::int64_t(iy) * is.w + ix];
              best = any ? std::max(best, v) : v;
              any = true;
            }
          }
          dst[std::int64_t(oy) * ow + ox] = best;
        }
    }
  return Tensor<T>::from_data(os, std::move(out));
}

}  // namespace listereo::ops

#endif  // LISTEREO_OPS_CONV_HPP_
