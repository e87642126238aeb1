#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <type_traits>
#include <utility>
#include <vector>

#include "heatcast/fastmath.hpp"
#include "heatcast/kernels.hpp"
#include "heatcast/tensor.hpp"

namespace heatcast {

// Wengert-list tape. Ops record one node per executed operation while a
// tape is active on the thread; execution order is a topological order, so
// the reverse walk visits each node exactly once and gradients sum across
// fan-out via accumulation into the shared grad buffers.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  class Scope {
   public:
    explicit Scope(Tape& t) : prev_(active_) { active_ = &t; }
    ~Scope() { active_ = prev_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* prev_;
  };

  static Tape* active() { return active_; }

  void record(const Tensor<T>& out, std::function<void()> fn) {
    nodes_.push_back(Node{out.impl(), std::move(fn)});
  }

  void backward(Tensor<T> loss) {
    if (loss.numel() != 1)
      throw std::logic_error("Tape::backward: loss must be scalar");
    loss.ensure_grad()[0] = T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      // Nodes whose output never received a gradient are off the loss path.
      if (!it->out->grad.empty()) it->fn();
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::shared_ptr<TensorImpl<T>> out;
    std::function<void()> fn;
  };
  std::vector<Node> nodes_;
  inline static thread_local Tape* active_ = nullptr;
};

namespace detail {

template <typename T>
void require_4d(const Tensor<T>& t, const char* what) {
  if (!t.defined() || t.shape().ndim() != 4)
    throw std::invalid_argument(std::string(what) + ": expected a 4D tensor");
}

template <typename T, typename... Ts>
bool any_requires_grad(const Tensor<T>& first, const Ts&... rest) {
  bool r = first.defined() && first.requires_grad();
  ((r = r || (rest.defined() && rest.requires_grad())), ...);
  return r;
}

}  // namespace detail

struct Conv2dOpts {
  int64_t stride = 1;
  int64_t pad = 0;
  int64_t groups = 1;
};

// Cross-correlation (no kernel flip). x:(B,Ci,H,W), w:(Co,Ci/g,KH,KW),
// bias:(Co) or undefined.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 const Conv2dOpts& opts = {}) {
  detail::require_4d(x, "conv2d input");
  detail::require_4d(w, "conv2d kernel");
  if (opts.stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  if (opts.pad < 0) throw std::invalid_argument("conv2d: negative padding");
  const int64_t groups = opts.groups;
  if (groups < 1 || x.shape()[1] % groups || w.shape()[0] % groups)
    throw std::invalid_argument("conv2d: bad group count");
  if (w.shape()[1] != x.shape()[1] / groups)
    throw std::invalid_argument(
        "conv2d: kernel channels " + w.shape().str() +
        " do not match input " + x.shape().str());
  if (bias.defined() &&
      (bias.shape().ndim() != 1 || bias.shape()[0] != w.shape()[0]))
    throw std::invalid_argument("conv2d: bias shape mismatch");

  const auto d = kern::conv_dims(x.shape()[0], x.shape()[1], x.shape()[2],
                                 x.shape()[3], w.shape()[0], w.shape()[2],
                                 w.shape()[3], opts.stride, opts.pad, groups);
  if (d.h_out < 1 || d.w_out < 1)
    throw std::invalid_argument("conv2d: kernel larger than padded input");

  Tensor<T> y = Tensor<T>::zeros(Shape{d.batch, d.c_out, d.h_out, d.w_out});
  kern::conv2d_forward(x.data(), w.data(),
                       bias.defined() ? bias.data() : nullptr, y.data(), d);

  Tape<T>* tape = Tape<T>::active();
  if (tape && detail::any_requires_grad(x, w, bias)) {
    y.set_requires_grad(true);
    tape->record(y, [x, w, bias, y, d]() mutable {
      const T* gy = y.grad().data();
      if (x.requires_grad())
        kern::conv2d_backward_input(gy, w.data(), x.ensure_grad().data(), d);
      if (w.requires_grad())
        kern::conv2d_backward_weight(gy, x.data(), w.ensure_grad().data(), d);
      if (bias.defined() && bias.requires_grad())
        kern::conv2d_backward_bias(gy, bias.ensure_grad().data(), d);
    });
  }
  return y;
}

// Reflection padding to (target_rows, target_cols) without repeating the
// edge pixel; centered, extra pixel on the bottom/right when odd.
template <typename T>
Tensor<T> mirror_pad(const Tensor<T>& x, int64_t target_rows,
                     int64_t target_cols) {
  detail::require_4d(x, "mirror_pad input");
  const int64_t rows = x.shape()[2], cols = x.shape()[3];
  if (target_rows < rows || target_cols < cols)
    throw std::invalid_argument("mirror_pad: target smaller than input");
  const int64_t pad_top = (target_rows - rows) / 2;
  const int64_t pad_left = (target_cols - cols) / 2;
  const int64_t pad_bottom = target_rows - rows - pad_top;
  const int64_t pad_right = target_cols - cols - pad_left;
  if (pad_top >= rows || pad_bottom >= rows || pad_left >= cols ||
      pad_right >= cols)
    throw std::invalid_argument(
        "mirror_pad: pad exceeds reflection constraint (pad per side must be "
        "smaller than the image)");

  std::vector<int64_t> rmap(static_cast<size_t>(target_rows));
  std::vector<int64_t> cmap(static_cast<size_t>(target_cols));
  for (int64_t r = 0; r < target_rows; ++r) {
    int64_t s = r - pad_top;
    if (s < 0) s = -s;
    if (s >= rows) s = 2 * (rows - 1) - s;
    rmap[size_t(r)] = s;
  }
  for (int64_t c = 0; c < target_cols; ++c) {
    int64_t s = c - pad_left;
    if (s < 0) s = -s;
    if (s >= cols) s = 2 * (cols - 1) - s;
    cmap[size_t(c)] = s;
  }

  const int64_t planes = x.shape()[0] * x.shape()[1];
  Tensor<T> y =
      Tensor<T>::zeros(Shape{x.shape()[0], x.shape()[1], target_rows, target_cols});
  {
    const T* xp = x.data();
    T* yp = y.data();
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p) {
      const T* xpl = xp + p * rows * cols;
      T* ypl = yp + p * target_rows * target_cols;
      for (int64_t r = 0; r < target_rows; ++r)
        for (int64_t c = 0; c < target_cols; ++c)
          ypl[r * target_cols + c] = xpl[rmap[size_t(r)] * cols + cmap[size_t(c)]];
    }
  }

  Tape<T>* tape = Tape<T>::active();
  if (tape && x.requires_grad()) {
    y.set_requires_grad(true);
    tape->record(y, [x, y, rmap, cmap, planes, rows, cols, target_rows,
                     target_cols]() mutable {
      const T* gy = y.grad().data();
      T* gx = x.ensure_grad().data();
      for (int64_t p = 0; p < planes; ++p) {
        const T* gypl = gy + p * target_rows * target_cols;
        T* gxpl = gx + p * rows * cols;
        for (int64_t r = 0; r < target_rows; ++r)
          for (int64_t c = 0; c < target_cols; ++c)
            gxpl[rmap[size_t(r)] * cols + cmap[size_t(c)]] +=
                gypl[r * target_cols + c];
      }
    });
  }
  return y;
}

template <typename T>
struct PaddedImage {
  Tensor<T> tensor;
  int64_t top = 0;   // row offset of the original content
  int64_t left = 0;  // col offset of the original content
};

// Mirror-pad to exactly (rows, cols), in several passes when the single-pass
// reflection constraint (pad per side < dim) requires it.
template <typename T>
PaddedImage<T> mirror_pad_to(const Tensor<T>& x, int64_t rows, int64_t cols) {
  detail::require_4d(x, "mirror_pad_to input");
  PaddedImage<T> out{x, 0, 0};
  int64_t r = x.shape()[2], c = x.shape()[3];
  while (r < rows || c < cols) {
    const int64_t nr = std::min(rows, r > 1 ? 3 * r - 2 : r);
    const int64_t nc = std::min(cols, c > 1 ? 3 * c - 2 : c);
    if (nr == r && nc == c)
      throw std::invalid_argument(
          "mirror_pad_to: image too small for reflection padding");
    out.top += (nr - r) / 2;
    out.left += (nc - c) / 2;
    out.tensor = mirror_pad(out.tensor, nr, nc);
    r = nr;
    c = nc;
  }
  return out;
}

// Window copy; inverse of the mirror_pad placement when offsets match.
template <typename T>
Tensor<T> crop(const Tensor<T>& x, int64_t r0, int64_t c0, int64_t rows,
               int64_t cols) {
  detail::require_4d(x, "crop input");
  if (r0 < 0 || c0 < 0 || rows < 1 || cols < 1 || r0 + rows > x.shape()[2] ||
      c0 + cols > x.shape()[3])
    throw std::invalid_argument("crop: window outside image");
  const int64_t in_rows = x.shape()[2], in_cols = x.shape()[3];
  const int64_t planes = x.shape()[0] * x.shape()[1];
  Tensor<T> y = Tensor<T>::zeros(Shape{x.shape()[0], x.shape()[1], rows, cols});
  {
    const T* xp = x.data();
    T* yp = y.data();
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p)
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t c = 0; c < cols; ++c)
          yp[(p * rows + r) * cols + c] =
              xp[(p * in_rows + r0 + r) * in_cols + c0 + c];
  }
  Tape<T>* tape = Tape<T>::active();
  if (tape && x.requires_grad()) {
    y.set_requires_grad(true);
    tape->record(y, [x, y, r0, c0, rows, cols, in_rows, in_cols,
                     planes]() mutable {
      const T* gy = y.grad().data();
      T* gx = x.ensure_grad().data();
      for (int64_t p = 0; p < planes; ++p)
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t c = 0; c < cols; ++c)
            gx[(p * in_rows + r0 + r) * in_cols + c0 + c] +=
                gy[(p * rows + r) * cols + c];
    });
  }
  return y;
}

// Each pixel becomes a 2x2 block.
template <typename T>
Tensor<T> upsample2x_nearest(const Tensor<T>& x) {
  detail::require_4d(x, "upsample2x_nearest input");
  const int64_t rows = x.shape()[2], cols = x.shape()[3];
  const int64_t planes = x.shape()[0] * x.shape()[1];
  Tensor<T> y =
      Tensor<T>::zeros(Shape{x.shape()[0], x.shape()[1], rows * 2, cols * 2});
  {
    const T* xp = x.data();
    T* yp = y.data();
#pragma omp parallel for schedule(static)
    for (int64_t p = 0; p < planes; ++p)
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t c = 0; c < cols; ++c) {
          const T v = xp[(p * rows + r) * cols + c];
          T* dst = yp + (p * rows * 2 + r * 2) * cols * 2 + c * 2;
          dst[0] = v;
          dst[1] = v;
          dst[cols * 2] = v;
          dst[cols * 2 + 1] = v;
        }
  }
  Tape<T>* tape = Tape<T>::active();
  if (tape && x.requires_grad()) {
    y.set_requires_grad(true);
    tape->record(y, [x, y, rows, cols, planes]() mutable {
      const T* gy = y.grad().data();
      T* gx = x.ensure_grad().data();
      for (int64_t p = 0; p < planes; ++p)
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t c = 0; c < cols; ++c) {
            const T* src = gy + (p * rows * 2 + r * 2) * cols * 2 + c * 2;
            gx[(p * rows + r) * cols + c] +=
                src[0] + src[1] + src[cols * 2] + src[cols * 2 + 1];
          }
    });
  }
  return y;
}

// Channel concatenation, output order (a, b). An undefined b is treated as
// empty and returns a unchanged.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (!b.defined()) return a;
  detail::require_4d(a, "concat_channels a");
  detail::require_4d(b, "concat_channels b");
  if (a.shape()[0] != b.shape()[0] || a.shape()[2] != b.shape()[2] ||
      a.shape()[3] != b.shape()[3])
    throw std::invalid_argument("concat_channels: batch/spatial mismatch " +
                                a.shape().str() + " vs " + b.shape().str());
  const int64_t batch = a.shape()[0];
  const int64_t ca = a.shape()[1], cb = b.shape()[1];
  const int64_t hw = a.shape()[2] * a.shape()[3];
  Tensor<T> y =
      Tensor<T>::zeros(Shape{batch, ca + cb, a.shape()[2], a.shape()[3]});
  {
    const T* ap = a.data();
    const T* bp = b.data();
    T* yp = y.data();
#pragma omp parallel for schedule(static)
    for (int64_t n = 0; n < batch; ++n) {
      T* dst = yp + n * (ca + cb) * hw;
      const T* sa = ap + n * ca * hw;
      const T* sb = bp + n * cb * hw;
      for (int64_t i = 0; i < ca * hw; ++i) dst[i] = sa[i];
      for (int64_t i = 0; i < cb * hw; ++i) dst[ca * hw + i] = sb[i];
    }
  }
  Tape<T>* tape = Tape<T>::active();
  if (tape && detail::any_requires_grad(a, b)) {
    y.set_requires_grad(true);
    tape->record(y, [a, b, y, batch, ca, cb, hw]() mutable {
      const T* gy = y.grad().data();
      if (a.requires_grad()) {
        T* ga = a.ensure_grad().data();
        for (int64_t n = 0; n < batch; ++n) {
          const T* src = gy + n * (ca + cb) * hw;
          for (int64_t i = 0; i < ca * hw; ++i) ga[n * ca * hw + i] += src[i];
        }
      }
      if (b.requires_grad()) {
        T* gb = b.ensure_grad().data();
        for (int64_t n = 0; n < batch; ++n) {
          const T* src = gy + n * (ca + cb) * hw + ca * hw;
          for (int64_t i = 0; i < cb * hw; ++i) gb[n * cb * hw + i] += src[i];
        }
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  const int64_t n = x.numel();
  {
    const T* xp = x.data();
    T* yp = y.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) yp[i] = xp[i] > T(0) ? xp[i] : T(0);
  }
  Tape<T>* tape = Tape<T>::active();
  if (tape && x.requires_grad()) {
    y.set_requires_grad(true);
    tape->record(y, [x, y, n]() mutable {
      const T* gy = y.grad().data();
      const T* xp = x.data();
      T* gx = x.ensure_grad().data();
      for (int64_t i = 0; i < n; ++i)
        if (xp[i] > T(0)) gx[i] += gy[i];
    });
  }
  return y;
}

// erf-based GELU. The float path uses a polynomial erf (error ~1.5e-7,
// and one shared Gaussian exponential feeds both erf and the derivative);
// the double path stays on libm for verification-grade exactness. The
// cdf/pdf factors are cached for backward.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  const int64_t n = x.numel();
  constexpr T inv_sqrt2 = T(0.7071067811865475244);
  constexpr T inv_sqrt_2pi = T(0.3989422804014326779);

  Tape<T>* tape = Tape<T>::active();
  const bool needs_grad = tape && x.requires_grad();
  std::vector<T> cdf_cache, pdf_cache;
  if (needs_grad) {
    cdf_cache.resize(size_t(n));
    pdf_cache.resize(size_t(n));
  }
  {
    const T* xp = x.data();
    T* yp = y.data();
    T* cc = needs_grad ? cdf_cache.data() : nullptr;
    T* pc = needs_grad ? pdf_cache.data() : nullptr;
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
      T cdf, pdf;
      if constexpr (std::is_same_v<T, float>) {
        const float g = fast_expf(-0.5f * xp[i] * xp[i]);
        cdf = 0.5f * (1.0f + fast_erff_with_exp(xp[i] * inv_sqrt2, g));
        pdf = inv_sqrt_2pi * g;
      } else {
        cdf = T(0.5) * (T(1) + std::erf(xp[i] * inv_sqrt2));
        pdf = inv_sqrt_2pi * std::exp(T(-0.5) * xp[i] * xp[i]);
      }
      yp[i] = xp[i] * cdf;
      if (cc) {
        cc[i] = cdf;
        pc[i] = pdf;
      }
    }
  }
  if (needs_grad) {
    y.set_requires_grad(true);
    tape->record(y, [x, y, n, cdf_cache = std::move(cdf_cache),
                     pdf_cache = std::move(pdf_cache)]() mutable {
      const T* gy = y.grad().data();
      const T* xp = x.data();
      T* gx = x.ensure_grad().data();
      for (int64_t i = 0; i < n; ++i)
        gx[i] += gy[i] * (cdf_cache[size_t(i)] + xp[i] * pdf_cache[size_t(i)]);
    });
  }
  return y;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("add: shape mismatch " + a.shape().str() +
                                " vs " + b.shape().str());
  Tensor<T> y = Tensor<T>::zeros(a.shape());
  const int64_t n = a.numel();
  {
    const T* ap = a.data();
    const T* bp = b.data();
    T* yp = y.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) yp[i] = ap[i] + bp[i];
  }
  Tape<T>* tape = Tape<T>::active();
  if (tape && detail::any_requires_grad(a, b)) {
    y.set_requires_grad(true);
    tape->record(y, [a, b, y, n]() mutable {
      const T* gy = y.grad().data();
      if (a.requires_grad()) {
        T* ga = a.ensure_grad().data();
        for (int64_t i = 0; i < n; ++i) ga[i] += gy[i];
      }
      if (b.requires_grad()) {
        T* gb = b.ensure_grad().data();
        for (int64_t i = 0; i < n; ++i) gb[i] += gy[i];
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("mul: shape mismatch " + a.shape().str() +
                                " vs " + b.shape().str());
  Tensor<T> y = Tensor<T>::zeros(a.shape());
  const int64_t n = a.numel();
  {
    const T* ap = a.data();
    const T* bp = b.data();
    T* yp = y.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) yp[i] = ap[i] * bp[i];
  }
  Tape<T>* tape = Tape<T>::active();
  if (tape && detail::any_requires_grad(a, b)) {
    y.set_requires_grad(true);
    tape->record(y, [a, b, y, n]() mutable {
      const T* gy = y.grad().data();
      if (a.requires_grad()) {
        T* ga = a.ensure_grad().data();
        const T* bp = b.data();
        for (int64_t i = 0; i < n; ++i) ga[i] += gy[i] * bp[i];
      }
      if (b.requires_grad()) {
        T* gb = b.ensure_grad().data();
        const T* ap = a.data();
        for (int64_t i = 0; i < n; ++i) gb[i] += gy[i] * ap[i];
      }
    });
  }
  return y;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  const int64_t n = x.numel();
  {
    const T* xp = x.data();
    T* yp = y.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) yp[i] = factor * xp[i];
  }
  Tape<T>* tape = Tape<T>::active();
  if (tape && x.requires_grad()) {
    y.set_requires_grad(true);
    tape->record(y, [x, y, factor, n]() mutable {
      const T* gy = y.grad().data();
      T* gx = x.ensure_grad().data();
      for (int64_t i = 0; i < n; ++i) gx[i] += factor * gy[i];
    });
  }
  return y;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  const int64_t n = x.numel();
  T acc = T(0);
  const T* xp = x.data();
  for (int64_t i = 0; i < n; ++i) acc += xp[i];
  Tensor<T> y = Tensor<T>::scalar(acc);
  Tape<T>* tape = Tape<T>::active();
  if (tape && x.requires_grad()) {
    y.set_requires_grad(true);
    tape->record(y, [x, y, n]() mutable {
      const T g = y.grad()[0];
      T* gx = x.ensure_grad().data();
      for (int64_t i = 0; i < n; ++i) gx[i] += g;
    });
  }
  return y;
}

// Normalization over (channels-in-group x spatial) per sample; per-channel
// affine when gamma/beta are defined.
template <typename T>
Tensor<T> group_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, int64_t groups, T eps = T(1e-5)) {
  detail::require_4d(x, "group_norm input");
  const int64_t batch = x.shape()[0], channels = x.shape()[1];
  const int64_t hw = x.shape()[2] * x.shape()[3];
  if (groups < 1 || channels % groups)
    throw std::invalid_argument("group_norm: groups must divide channels");
  if (gamma.defined() && gamma.numel() != channels)
    throw std::invalid_argument("group_norm: gamma size mismatch");
  if (beta.defined() && beta.numel() != channels)
    throw std::invalid_argument("group_norm: beta size mismatch");

  std::vector<T> mean(size_t(batch * groups)), istd(size_t(batch * groups));
  kern::group_norm_stats(x.data(), batch, channels, hw, groups, eps,
                         mean.data(), istd.data());

  const int64_t cg = channels / groups;
  Tensor<T> y = Tensor<T>::zeros(x.shape());
  {
    const T* xp = x.data();
    T* yp = y.data();
    const T* gp = gamma.defined() ? gamma.data() : nullptr;
    const T* bp = beta.defined() ? beta.data() : nullptr;
#pragma omp parallel for schedule(static)
    for (int64_t bc = 0; bc < batch * channels; ++bc) {
      const int64_t b = bc / channels;
      const int64_t c = bc % channels;
      const int64_t bg = b * groups + c / cg;
      const T m = mean[size_t(bg)], is = istd[size_t(bg)];
      const T ga = gp ? gp[c] : T(1);
      const T be = bp ? bp[c] : T(0);
      const T* xr = xp + bc * hw;
      T* yr = yp + bc * hw;
      for (int64_t i = 0; i < hw; ++i) yr[i] = ga * ((xr[i] - m) * is) + be;
    }
  }

  Tape<T>* tape = Tape<T>::active();
  if (tape && detail::any_requires_grad(x, gamma, beta)) {
    y.set_requires_grad(true);
    tape->record(y, [x, gamma, beta, y, mean, istd, batch, channels, hw, cg,
                     groups]() mutable {
      const T* gy = y.grad().data();
      const T* xp = x.data();
      const T* gp = gamma.defined() ? gamma.data() : nullptr;
      const int64_t n = cg * hw;
      if (x.requires_grad()) {
        T* gx = x.ensure_grad().data();
        for (int64_t bg = 0; bg < batch * groups; ++bg) {
          const int64_t b = bg / groups;
          const int64_t g = bg % groups;
          const int64_t base = (b * channels + g * cg) * hw;
          const T m = mean[size_t(bg)], is = istd[size_t(bg)];
          // h = dL/dyhat; two reductions then the closed-form input grad
          T s1 = T(0), s2 = T(0);
          for (int64_t j = 0; j < n; ++j) {
            const int64_t c = g * cg + j / hw;
            const T h = gy[base + j] * (gp ? gp[c] : T(1));
            const T yh = (xp[base + j] - m) * is;
            s1 += h;
            s2 += h * yh;
          }
          s1 /= T(n);
          s2 /= T(n);
          for (int64_t j = 0; j < n; ++j) {
            const int64_t c = g * cg + j / hw;
            const T h = gy[base + j] * (gp ? gp[c] : T(1));
            const T yh = (xp[base + j] - m) * is;
            gx[base + j] += is * (h - s1 - yh * s2);
          }
        }
      }
      if (gamma.defined() && gamma.requires_grad()) {
        T* gg = gamma.ensure_grad().data();
        for (int64_t c = 0; c < channels; ++c) {
          T acc = T(0);
          for (int64_t b = 0; b < batch; ++b) {
            const int64_t bg = b * groups + c / cg;
            const T m = mean[size_t(bg)], is = istd[size_t(bg)];
            const int64_t base = (b * channels + c) * hw;
            for (int64_t i = 0; i < hw; ++i)
              acc += gy[base + i] * ((xp[base + i] - m) * is);
          }
          gg[c] += acc;
        }
      }
      if (beta.defined() && beta.requires_grad()) {
        T* gb = beta.ensure_grad().data();
        for (int64_t c = 0; c < channels; ++c) {
          T acc = T(0);
          for (int64_t b = 0; b < batch; ++b) {
            const int64_t base = (b * channels + c) * hw;
            for (int64_t i = 0; i < hw; ++i) acc += gy[base + i];
          }
          gb[c] += acc;
        }
      }
    });
  }
  return y;
}

// Per-pixel normalization across the channel axis with per-channel affine
// (the ConvNeXt flavor of layer norm).
template <typename T>
Tensor<T> layer_norm_channels(const Tensor<T>& x, const Tensor<T>& gamma,
                              const Tensor<T>& beta, T eps = T(1e-6)) {
  detail::require_4d(x, "layer_norm_channels input");
  const int64_t batch = x.shape()[0], channels = x.shape()[1];
  const int64_t hw = x.shape()[2] * x.shape()[3];
  if (gamma.defined() && gamma.numel() != channels)
    throw std::invalid_argument("layer_norm_channels: gamma size mismatch");
  if (beta.defined() && beta.numel() != channels)
    throw std::invalid_argument("layer_norm_channels: beta size mismatch");

  // Per-pixel stats accumulated channel-by-channel so every pass streams
  // memory sequentially (channel-strided access thrashes the cache).
  std::vector<T> mean(size_t(batch * hw), T(0));
  std::vector<T> istd(size_t(batch * hw), T(0));
  {
    const T* xp = x.data();
#pragma omp parallel for schedule(static)
    for (int64_t b = 0; b < batch; ++b) {
      T* m = mean.data() + b * hw;
      T* v = istd.data() + b * hw;  // holds E[x^2] until finalized
      for (int64_t c = 0; c < channels; ++c) {
        const T* px = xp + (b * channels + c) * hw;
        for (int64_t i = 0; i < hw; ++i) {
          m[i] += px[i];
          v[i] += px[i] * px[i];
        }
      }
      for (int64_t i = 0; i < hw; ++i) {
        m[i] /= T(channels);
        T var = v[i] / T(channels) - m[i] * m[i];
        if (var < T(0)) var = T(0);
        v[i] = T(1) / std::sqrt(var + eps);
      }
    }
  }

  Tensor<T> y = Tensor<T>::zeros(x.shape());
  {
    const T* xp = x.data();
    T* yp = y.data();
    const T* gp = gamma.defined() ? gamma.data() : nullptr;
    const T* bp = beta.defined() ? beta.data() : nullptr;
#pragma omp parallel for schedule(static)
    for (int64_t b = 0; b < batch; ++b) {
      const T* m = mean.data() + b * hw;
      const T* is = istd.data() + b * hw;
      for (int64_t c = 0; c < channels; ++c) {
        const T* px = xp + (b * channels + c) * hw;
        T* py = yp + (b * channels + c) * hw;
        const T ga = gp ? gp[c] : T(1);
        const T be = bp ? bp[c] : T(0);
        for (int64_t i = 0; i < hw; ++i)
          py[i] = ga * ((px[i] - m[i]) * is[i]) + be;
      }
    }
  }

  Tape<T>* tape = Tape<T>::active();
  if (tape && detail::any_requires_grad(x, gamma, beta)) {
    y.set_requires_grad(true);
    tape->record(y, [x, gamma, beta, y, mean, istd, batch, channels,
                     hw]() mutable {
      const T* gy = y.grad().data();
      const T* xp = x.data();
      const T* gp = gamma.defined() ? gamma.data() : nullptr;
      if (x.requires_grad()) {
        T* gx = x.ensure_grad().data();
        std::vector<T> s1(static_cast<size_t>(hw));
        std::vector<T> s2(static_cast<size_t>(hw));
        for (int64_t b = 0; b < batch; ++b) {
          const T* m = mean.data() + b * hw;
          const T* is = istd.data() + b * hw;
          std::fill(s1.begin(), s1.end(), T(0));
          std::fill(s2.begin(), s2.end(), T(0));
          for (int64_t c = 0; c < channels; ++c) {
            const int64_t off = (b * channels + c) * hw;
            const T ga = gp ? gp[c] : T(1);
            for (int64_t i = 0; i < hw; ++i) {
              const T h = gy[off + i] * ga;
              s1[size_t(i)] += h;
              s2[size_t(i)] += h * ((xp[off + i] - m[i]) * is[i]);
            }
          }
          for (int64_t i = 0; i < hw; ++i) {
            s1[size_t(i)] /= T(channels);
            s2[size_t(i)] /= T(channels);
          }
          for (int64_t c = 0; c < channels; ++c) {
            const int64_t off = (b * channels + c) * hw;
            const T ga = gp ? gp[c] : T(1);
            for (int64_t i = 0; i < hw; ++i) {
              const T h = gy[off + i] * ga;
              const T yh = (xp[off + i] - m[i]) * is[i];
              gx[off + i] += is[i] * (h - s1[size_t(i)] - yh * s2[size_t(i)]);
            }
          }
        }
      }
      if (gamma.defined() && gamma.requires_grad()) {
        T* gg = gamma.ensure_grad().data();
        for (int64_t c = 0; c < channels; ++c) {
          T acc = T(0);
          for (int64_t b = 0; b < batch; ++b) {
            const int64_t off = (b * channels + c) * hw;
            const T* m = mean.data() + b * hw;
            const T* is = istd.data() + b * hw;
            for (int64_t i = 0; i < hw; ++i)
              acc += gy[off + i] * ((xp[off + i] - m[i]) * is[i]);
          }
          gg[c] += acc;
        }
      }
      if (beta.defined() && beta.requires_grad()) {
        T* gb = beta.ensure_grad().data();
        for (int64_t c = 0; c < channels; ++c) {
          T acc = T(0);
          for (int64_t b = 0; b < batch; ++b) {
            const int64_t off = (b * channels + c) * hw;
            for (int64_t i = 0; i < hw; ++i) acc += gy[off + i];
          }
          gb[c] += acc;
        }
      }
    });
  }
  return y;
}

// Masked MSE over a batch of sparse targets. Per-sample mean over its valid
// pixels, then mean over samples that have any; samples with no valid pixel
// contribute no loss and no gradient.
template <typename T>
struct MaskedLoss {
  Tensor<T> loss;           // scalar
  int64_t valid_total = 0;  // valid pixels over the whole batch
  int contributing = 0;     // samples with >= 1 valid pixel
  int skipped = 0;          // samples with none
  bool all_skipped() const { return contributing == 0; }
};

// pred:(B,1,H,W); target/mask flat (B*H*W), row-major per sample.
template <typename T>
MaskedLoss<T> masked_mse(const Tensor<T>& pred, const std::vector<T>& target,
                         const std::vector<uint8_t>& mask) {
  detail::require_4d(pred, "masked_mse pred");
  if (pred.shape()[1] != 1)
    throw std::invalid_argument("masked_mse: pred must have one channel");
  const int64_t batch = pred.shape()[0];
  const int64_t hw = pred.shape()[2] * pred.shape()[3];
  if (int64_t(target.size()) != batch * hw || mask.size() != target.size())
    throw std::invalid_argument("masked_mse: target/mask size mismatch");

  MaskedLoss<T> out;
  std::vector<int64_t> valid_count(size_t(batch), 0);
  std::vector<T> sample_sse(size_t(batch), T(0));
  const T* pp = pred.data();
  for (int64_t b = 0; b < batch; ++b) {
    int64_t nv = 0;
    T sse = T(0);
    for (int64_t i = 0; i < hw; ++i) {
      if (!mask[size_t(b * hw + i)]) continue;
      const T e = pp[b * hw + i] - target[size_t(b * hw + i)];
      sse += e * e;
      ++nv;
    }
    valid_count[size_t(b)] = nv;
    sample_sse[size_t(b)] = sse;
    out.valid_total += nv;
    if (nv > 0)
      ++out.contributing;
    else
      ++out.skipped;
  }

  T loss_val = T(0);
  if (out.contributing > 0) {
    for (int64_t b = 0; b < batch; ++b)
      if (valid_count[size_t(b)] > 0)
        loss_val += sample_sse[size_t(b)] / T(valid_count[size_t(b)]);
    loss_val /= T(out.contributing);
  }
  out.loss = Tensor<T>::scalar(loss_val);

  Tape<T>* tape = Tape<T>::active();
  if (tape && pred.requires_grad() && out.contributing > 0) {
    out.loss.set_requires_grad(true);
    Tensor<T> loss = out.loss;
    const int contributing = out.contributing;
    tape->record(loss, [pred, loss, target, mask, valid_count, batch, hw,
                        contributing]() mutable {
      const T g = loss.grad()[0];
      T* gp = pred.ensure_grad().data();
      const T* pp = pred.data();
      for (int64_t b = 0; b < batch; ++b) {
        const int64_t nv = valid_count[size_t(b)];
        if (nv == 0) continue;
        const T w = g * T(2) / (T(nv) * T(contributing));
        for (int64_t i = 0; i < hw; ++i) {
          if (!mask[size_t(b * hw + i)]) continue;
          gp[b * hw + i] +=
              w * (pp[b * hw + i] - target[size_t(b * hw + i)]);
        }
      }
    });
  }
  return out;
}

}  // namespace heatcast
