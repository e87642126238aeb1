#pragma once

#include <cmath>
#include <cstdint>

namespace heatcast::kern_ref {

// Serial reference kernels: the straightforward nested-loop definitions.
// These are the oracle the OpenMP kernels are tested against and the
// baseline side of the kernel benchmark. Keep them dumb.

struct ConvDims {
  int64_t batch, c_in, h_in, w_in;
  int64_t c_out, kh, kw;
  int64_t stride, pad, groups;
  int64_t h_out, w_out;
};

inline ConvDims conv_dims(int64_t batch, int64_t c_in, int64_t h_in,
                          int64_t w_in, int64_t c_out, int64_t kh, int64_t kw,
                          int64_t stride, int64_t pad, int64_t groups) {
  ConvDims d{batch, c_in, h_in, w_in, c_out, kh, kw, stride, pad, groups, 0, 0};
  d.h_out = (h_in + 2 * pad - kh) / stride + 1;
  d.w_out = (w_in + 2 * pad - kw) / stride + 1;
  return d;
}

// Cross-correlation, no kernel flip. x:(B,Ci,H,W) w:(Co,Ci/g,KH,KW)
// b:(Co) or null, out:(B,Co,OH,OW).
template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, T* out,
                    const ConvDims& d) {
  const int64_t cig = d.c_in / d.groups;
  const int64_t cog = d.c_out / d.groups;
  for (int64_t n = 0; n < d.batch; ++n)
    for (int64_t oc = 0; oc < d.c_out; ++oc) {
      const int64_t g = oc / cog;
      for (int64_t oh = 0; oh < d.h_out; ++oh)
        for (int64_t ow = 0; ow < d.w_out; ++ow) {
          T acc = b ? b[oc] : T(0);
          for (int64_t icl = 0; icl < cig; ++icl) {
            const int64_t ic = g * cig + icl;
            for (int64_t r = 0; r < d.kh; ++r)
              for (int64_t c = 0; c < d.kw; ++c) {
                const int64_t ih = oh * d.stride + r - d.pad;
                const int64_t iw = ow * d.stride + c - d.pad;
                if (ih < 0 || ih >= d.h_in || iw < 0 || iw >= d.w_in) continue;
                acc += x[((n * d.c_in + ic) * d.h_in + ih) * d.w_in + iw] *
                       w[((oc * cig + icl) * d.kh + r) * d.kw + c];
              }
          }
          out[((n * d.c_out + oc) * d.h_out + oh) * d.w_out + ow] = acc;
        }
    }
}

// Gradient w.r.t. the input.
template <typename T>
void conv2d_backward_input(const T* gout, const T* w, T* gx,
                           const ConvDims& d) {
  const int64_t cig = d.c_in / d.groups;
  const int64_t cog = d.c_out / d.groups;
  for (int64_t n = 0; n < d.batch; ++n)
    for (int64_t ic = 0; ic < d.c_in; ++ic) {
      const int64_t g = ic / cig;
      const int64_t icl = ic % cig;
      for (int64_t ih = 0; ih < d.h_in; ++ih)
        for (int64_t iw = 0; iw < d.w_in; ++iw) {
          T acc = T(0);
          for (int64_t ocl = 0; ocl < cog; ++ocl) {
            const int64_t oc = g * cog + ocl;
            for (int64_t r = 0; r < d.kh; ++r)
              for (int64_t c = 0; c < d.kw; ++c) {
                const int64_t num_h = ih + d.pad - r;
                const int64_t num_w = iw + d.pad - c;
                if (num_h % d.stride || num_w % d.stride) continue;
                const int64_t oh = num_h / d.stride;
                const int64_t ow = num_w / d.stride;
                if (oh < 0 || oh >= d.h_out || ow < 0 || ow >= d.w_out)
                  continue;
                acc += gout[((n * d.c_out + oc) * d.h_out + oh) * d.w_out + ow] *
                       w[((oc * cig + icl) * d.kh + r) * d.kw + c];
              }
          }
          gx[((n * d.c_in + ic) * d.h_in + ih) * d.w_in + iw] += acc;
        }
    }
}

// Gradient w.r.t. the kernel.
template <typename T>
void conv2d_backward_weight(const T* gout, const T* x, T* gw,
                            const ConvDims& d) {
  const int64_t cig = d.c_in / d.groups;
  const int64_t cog = d.c_out / d.groups;
  for (int64_t oc = 0; oc < d.c_out; ++oc) {
    const int64_t g = oc / cog;
    for (int64_t icl = 0; icl < cig; ++icl) {
      const int64_t ic = g * cig + icl;
      for (int64_t r = 0; r < d.kh; ++r)
        for (int64_t c = 0; c < d.kw; ++c) {
          T acc = T(0);
          for (int64_t n = 0; n < d.batch; ++n)
            for (int64_t oh = 0; oh < d.h_out; ++oh)
              for (int64_t ow = 0; ow < d.w_out; ++ow) {
                const int64_t ih = oh * d.stride + r - d.pad;
                const int64_t iw = ow * d.stride + c - d.pad;
                if (ih < 0 || ih >= d.h_in || iw < 0 || iw >= d.w_in) continue;
                acc += gout[((n * d.c_out + oc) * d.h_out + oh) * d.w_out + ow] *
                       x[((n * d.c_in + ic) * d.h_in + ih) * d.w_in + iw];
              }
          gw[((oc * cig + icl) * d.kh + r) * d.kw + c] += acc;
        }
    }
  }
}

template <typename T>
void conv2d_backward_bias(const T* gout, T* gb, const ConvDims& d) {
  for (int64_t oc = 0; oc < d.c_out; ++oc) {
    T acc = T(0);
    for (int64_t n = 0; n < d.batch; ++n)
      for (int64_t oh = 0; oh < d.h_out; ++oh)
        for (int64_t ow = 0; ow < d.w_out; ++ow)
          acc += gout[((n * d.c_out + oc) * d.h_out + oh) * d.w_out + ow];
    gb[oc] += acc;
  }
}

// Per-(sample, group) mean/inverse-std, biased variance.
template <typename T>
void group_norm_stats(const T* x, int64_t batch, int64_t channels, int64_t hw,
                      int64_t groups, T eps, T* mean, T* istd) {
  const int64_t cg = channels / groups;
  const int64_t n = cg * hw;
  for (int64_t b = 0; b < batch; ++b)
    for (int64_t g = 0; g < groups; ++g) {
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
      mean[b * groups + g] = m;
      istd[b * groups + g] = T(1) / std::sqrt(v + eps);
    }
}

}  // namespace heatcast::kern_ref
