#pragma once

#include <cmath>
#include <cstdint>

#include "heatcast/kernels_ref.hpp"

namespace heatcast::kern {

using kern_ref::ConvDims;
using kern_ref::conv_dims;

// Production kernels. Parallelism is over independent output elements and
// every output element accumulates its terms in one fixed serial order, so
// results do not depend on the worker count.

template <typename T>
void conv2d_forward(const T* __restrict x, const T* __restrict w,
                    const T* __restrict b, T* __restrict out,
                    const ConvDims& d) {
  const int64_t cig = d.c_in / d.groups;
  const int64_t cog = d.c_out / d.groups;
  const int64_t rows = d.batch * d.c_out * d.h_out;
#pragma omp parallel for schedule(static)
  for (int64_t row = 0; row < rows; ++row) {
    const int64_t oh = row % d.h_out;
    const int64_t oc = (row / d.h_out) % d.c_out;
    const int64_t n = row / (d.h_out * d.c_out);
    const int64_t g = oc / cog;
    T* out_row = out + ((n * d.c_out + oc) * d.h_out + oh) * d.w_out;
    const T bias = b ? b[oc] : T(0);
    for (int64_t ow = 0; ow < d.w_out; ++ow) out_row[ow] = bias;
    for (int64_t icl = 0; icl < cig; ++icl) {
      const int64_t ic = g * cig + icl;
      const T* x_chan = x + (n * d.c_in + ic) * d.h_in * d.w_in;
      const T* w_base = w + (oc * cig + icl) * d.kh * d.kw;
      for (int64_t r = 0; r < d.kh; ++r) {
        const int64_t ih = oh * d.stride + r - d.pad;
        if (ih < 0 || ih >= d.h_in) continue;
        const T* x_row = x_chan + ih * d.w_in;
        for (int64_t c = 0; c < d.kw; ++c) {
          const T wv = w_base[r * d.kw + c];
          // iw = ow*stride + c - pad; precompute the ow range with iw in
          // [0, w_in) so the inner loop is branch-free.
          const int64_t shift = c - d.pad;
          const int64_t lo =
              shift < 0 ? (-shift + d.stride - 1) / d.stride : 0;
          int64_t hi = (d.w_in - 1 - shift) / d.stride;  // inclusive
          if (hi > d.w_out - 1) hi = d.w_out - 1;
          if (d.stride == 1) {
            for (int64_t ow = lo; ow <= hi; ++ow)
              out_row[ow] += wv * x_row[ow + shift];
          } else {
            for (int64_t ow = lo; ow <= hi; ++ow)
              out_row[ow] += wv * x_row[ow * d.stride + shift];
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const T* __restrict gout, const T* __restrict w,
                           T* __restrict gx,
                           const ConvDims& d) {
  const int64_t cig = d.c_in / d.groups;
  const int64_t cog = d.c_out / d.groups;
  const int64_t planes = d.batch * d.c_in;
#pragma omp parallel for schedule(static)
  for (int64_t plane = 0; plane < planes; ++plane) {
    const int64_t ic = plane % d.c_in;
    const int64_t n = plane / d.c_in;
    const int64_t g = ic / cig;
    const int64_t icl = ic % cig;
    T* gx_plane = gx + plane * d.h_in * d.w_in;
    if (d.stride == 1) {
      // Scatter form: each (oc, kh, kw) tap contributes a shifted row
      // axpy; gx rows are touched in a fixed (oc, r, oh, c) order.
      for (int64_t ocl = 0; ocl < cog; ++ocl) {
        const int64_t oc = g * cog + ocl;
        const T* g_chan = gout + (n * d.c_out + oc) * d.h_out * d.w_out;
        const T* w_base = w + (oc * cig + icl) * d.kh * d.kw;
        for (int64_t r = 0; r < d.kh; ++r)
          for (int64_t oh = 0; oh < d.h_out; ++oh) {
            const int64_t ih = oh + r - d.pad;
            if (ih < 0 || ih >= d.h_in) continue;
            const T* g_row = g_chan + oh * d.w_out;
            T* gx_row = gx_plane + ih * d.w_in;
            for (int64_t c = 0; c < d.kw; ++c) {
              const T wv = w_base[r * d.kw + c];
              const int64_t shift = c - d.pad;  // iw = ow + shift
              const int64_t lo = shift < 0 ? -shift : 0;
              int64_t hi = d.w_in - 1 - shift;  // inclusive
              if (hi > d.w_out - 1) hi = d.w_out - 1;
              for (int64_t ow = lo; ow <= hi; ++ow)
                gx_row[ow + shift] += wv * g_row[ow];
            }
          }
      }
      continue;
    }
    for (int64_t ih = 0; ih < d.h_in; ++ih)
      for (int64_t iw = 0; iw < d.w_in; ++iw) {
        T acc = T(0);
        for (int64_t ocl = 0; ocl < cog; ++ocl) {
          const int64_t oc = g * cog + ocl;
          const T* g_chan = gout + (n * d.c_out + oc) * d.h_out * d.w_out;
          const T* w_base = w + (oc * cig + icl) * d.kh * d.kw;
          for (int64_t r = 0; r < d.kh; ++r) {
            const int64_t num_h = ih + d.pad - r;
            if (num_h % d.stride) continue;
            const int64_t oh = num_h / d.stride;
            if (oh < 0 || oh >= d.h_out) continue;
            for (int64_t c = 0; c < d.kw; ++c) {
              const int64_t num_w = iw + d.pad - c;
              if (num_w % d.stride) continue;
              const int64_t ow = num_w / d.stride;
              if (ow < 0 || ow >= d.w_out) continue;
              acc += g_chan[oh * d.w_out + ow] * w_base[r * d.kw + c];
            }
          }
        }
        gx_plane[ih * d.w_in + iw] += acc;
      }
  }
}

template <typename T>
void conv2d_backward_weight(const T* __restrict gout, const T* __restrict x,
                            T* __restrict gw,
                            const ConvDims& d) {
  const int64_t cig = d.c_in / d.groups;
  const int64_t cog = d.c_out / d.groups;
  const int64_t widx = d.c_out * cig * d.kh * d.kw;
#pragma omp parallel for schedule(static)
  for (int64_t wi = 0; wi < widx; ++wi) {
    const int64_t c = wi % d.kw;
    const int64_t r = (wi / d.kw) % d.kh;
    const int64_t icl = (wi / (d.kw * d.kh)) % cig;
    const int64_t oc = wi / (d.kw * d.kh * cig);
    const int64_t g = oc / cog;
    const int64_t ic = g * cig + icl;
    // Four independent partial sums break the FP-add latency chain; the
    // combination order is fixed, so results never depend on threading.
    T acc0 = T(0), acc1 = T(0), acc2 = T(0), acc3 = T(0);
    for (int64_t n = 0; n < d.batch; ++n) {
      const T* g_chan = gout + (n * d.c_out + oc) * d.h_out * d.w_out;
      const T* x_chan = x + (n * d.c_in + ic) * d.h_in * d.w_in;
      for (int64_t oh = 0; oh < d.h_out; ++oh) {
        const int64_t ih = oh * d.stride + r - d.pad;
        if (ih < 0 || ih >= d.h_in) continue;
        const T* g_row = g_chan + oh * d.w_out;
        const T* x_row = x_chan + ih * d.w_in;
        const int64_t shift = c - d.pad;
        const int64_t lo =
            shift < 0 ? (-shift + d.stride - 1) / d.stride : 0;
        int64_t hi = (d.w_in - 1 - shift) / d.stride;  // inclusive
        if (hi > d.w_out - 1) hi = d.w_out - 1;
        int64_t ow = lo;
        if (d.stride == 1) {
          for (; ow + 3 <= hi; ow += 4) {
            acc0 += g_row[ow] * x_row[ow + shift];
            acc1 += g_row[ow + 1] * x_row[ow + 1 + shift];
            acc2 += g_row[ow + 2] * x_row[ow + 2 + shift];
            acc3 += g_row[ow + 3] * x_row[ow + 3 + shift];
          }
          for (; ow <= hi; ++ow) acc0 += g_row[ow] * x_row[ow + shift];
        } else {
          for (; ow <= hi; ++ow)
            acc0 += g_row[ow] * x_row[ow * d.stride + shift];
        }
      }
    }
    gw[wi] += ((acc0 + acc1) + (acc2 + acc3));
  }
}

template <typename T>
void conv2d_backward_bias(const T* __restrict gout, T* __restrict gb,
                          const ConvDims& d) {
#pragma omp parallel for schedule(static)
  for (int64_t oc = 0; oc < d.c_out; ++oc) {
    T acc = T(0);
    for (int64_t n = 0; n < d.batch; ++n) {
      const T* g_chan = gout + (n * d.c_out + oc) * d.h_out * d.w_out;
      for (int64_t i = 0; i < d.h_out * d.w_out; ++i) acc += g_chan[i];
    }
    gb[oc] += acc;
  }
}

template <typename T>
void group_norm_stats(const T* x, int64_t batch, int64_t channels, int64_t hw,
                      int64_t groups, T eps, T* mean, T* istd) {
  const int64_t cg = channels / groups;
  const int64_t n = cg * hw;
#pragma omp parallel for schedule(static)
  for (int64_t bg = 0; bg < batch * groups; ++bg) {
    const int64_t b = bg / groups;
    const int64_t g = bg % groups;
    const T* base = x + (b * channels + g * cg) * hw;
    T m = T(0);
    for (int64_t i = 0; i < n; ++i) m += base[i];
    m /= T(n);
    T v = T(0);
    for (int64_t i = 0; i < n; ++i) {
      const T dxi = base[i] - m;
      v += dxi * dxi;
    }
    v /= T(n);
    mean[bg] = m;
    istd[bg] = T(1) / std::sqrt(v + eps);
  }
}

}  // namespace heatcast::kern
