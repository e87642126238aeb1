#include "heatcast/models.hpp"

#include <algorithm>

#include "heatcast/autograd.hpp"
#include "heatcast/common.hpp"
#include "heatcast/features.hpp"
#include "heatcast/rng.hpp"

namespace heatcast {

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "linear") return ModelKind::linear;
  if (s == "resnet-style") return ModelKind::resnet_style;
  if (s == "convnext-style") return ModelKind::convnext_style;
  throw UsageError("unknown model kind '" + s +
                   "' (expected linear|resnet-style|convnext-style)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::linear:
      return "linear";
    case ModelKind::resnet_style:
      return "resnet-style";
    default:
      return "convnext-style";
  }
}

void ArchConfig::validate() const {
  if (stages() < 2) throw UsageError("arch: need at least 2 stages");
  for (int64_t w : widths)
    if (w < 1) throw UsageError("arch: widths must be positive");
  if (stem_stride != 1 && stem_stride != 2)
    throw UsageError("arch: stem_stride must be 1 or 2");
  if (head_width < 1) throw UsageError("arch: head_width must be positive");
  if (gn_groups < 1) throw UsageError("arch: gn_groups must be positive");
  for (int64_t w : widths)
    if (w % gn_groups)
      throw UsageError("arch: widths must be divisible by gn_groups");
  if (head_width % gn_groups)
    throw UsageError("arch: head_width must be divisible by gn_groups");
}

namespace {

template <typename T>
class Builder {
 public:
  Builder(ParamSet<T>& params, Rng& rng) : params_(params), rng_(rng) {}

  void conv(const std::string& prefix, int64_t c_out, int64_t c_in_per_group,
            int64_t kh, int64_t kw) {
    const double fan_in = double(c_in_per_group * kh * kw);
    const double std = std::sqrt(2.0 / fan_in);
    Tensor<T> w = Tensor<T>::zeros(Shape{c_out, c_in_per_group, kh, kw});
    for (int64_t i = 0; i < w.numel(); ++i)
      w.data()[i] = T(rng_.normal(0.0, std));
    params_.add(prefix + ".w", std::move(w));
    params_.add(prefix + ".b", Tensor<T>::zeros(Shape{c_out}));
  }

  void norm(const std::string& prefix, int64_t channels) {
    params_.add(prefix + ".gamma", Tensor<T>::full(Shape{channels}, T(1)));
    params_.add(prefix + ".beta", Tensor<T>::zeros(Shape{channels}));
  }

  void residual_block(const std::string& prefix, int64_t c_in, int64_t c_out) {
    conv(prefix + ".conv1", c_out, c_in, 3, 3);
    norm(prefix + ".norm1", c_out);
    conv(prefix + ".conv2", c_out, c_out, 3, 3);
    norm(prefix + ".norm2", c_out);
    if (c_in != c_out) conv(prefix + ".proj", c_out, c_in, 1, 1);
  }

  void convnext_block(const std::string& prefix, int64_t c) {
    conv(prefix + ".dw", c, 1, 7, 7);  // depthwise
    norm(prefix + ".ln", c);
    conv(prefix + ".pw1", 4 * c, c, 1, 1);
    conv(prefix + ".pw2", c, 4 * c, 1, 1);
  }

 private:
  ParamSet<T>& params_;
  Rng& rng_;
};

template <typename T>
Tensor<T> run_conv(const ParamSet<T>& p, const std::string& prefix,
                   const Tensor<T>& x, int64_t stride = 1, int64_t pad = 0,
                   int64_t groups = 1) {
  return conv2d(x, p.at(prefix + ".w"), p.at(prefix + ".b"),
                Conv2dOpts{stride, pad, groups});
}

template <typename T>
Tensor<T> run_gn(const ParamSet<T>& p, const std::string& prefix,
                 const Tensor<T>& x, int64_t groups) {
  return group_norm(x, p.at(prefix + ".gamma"), p.at(prefix + ".beta"), groups);
}

template <typename T>
Tensor<T> run_ln(const ParamSet<T>& p, const std::string& prefix,
                 const Tensor<T>& x) {
  return layer_norm_channels(x, p.at(prefix + ".gamma"),
                             p.at(prefix + ".beta"));
}

// Two 3x3 convs with group norm and an additive identity; a 1x1 projection
// shortcut appears only when the channel count changes.
template <typename T>
Tensor<T> run_residual_block(const ParamSet<T>& p, const std::string& prefix,
                             const Tensor<T>& x, int64_t gn_groups) {
  Tensor<T> y = run_conv(p, prefix + ".conv1", x, 1, 1);
  y = relu(run_gn(p, prefix + ".norm1", y, gn_groups));
  y = run_conv(p, prefix + ".conv2", y, 1, 1);
  y = run_gn(p, prefix + ".norm2", y, gn_groups);
  Tensor<T> shortcut =
      p.has(prefix + ".proj.w") ? run_conv(p, prefix + ".proj", x) : x;
  return relu(add(y, shortcut));
}

// 7x7 depthwise conv, channel layer norm, 1x1 expand x4, GELU, 1x1
// project, residual add.
template <typename T>
Tensor<T> run_convnext_block(const ParamSet<T>& p, const std::string& prefix,
                             const Tensor<T>& x) {
  const int64_t c = x.shape()[1];
  Tensor<T> y = run_conv(p, prefix + ".dw", x, 1, 3, c);
  y = run_ln(p, prefix + ".ln", y);
  y = run_conv(p, prefix + ".pw1", y);
  y = gelu(y);
  y = run_conv(p, prefix + ".pw2", y);
  return add(x, y);
}

int64_t round_up(int64_t v, int64_t multiple) {
  return ((v + multiple - 1) / multiple) * multiple;
}

}  // namespace

template <typename T>
ModelParams<T> build_model(ModelKind kind, const ArchConfig& arch,
                           uint64_t seed) {
  ModelParams<T> model;
  model.kind = kind;
  model.arch = arch;
  Rng rng = Rng::stream(seed, {0x6d6f64656cULL});
  Builder<T> b(model.params, rng);

  if (kind == ModelKind::linear) {
    Tensor<T> w = Tensor<T>::zeros(Shape{1, kStackChannels, 1, 1});
    for (int64_t i = 0; i < w.numel(); ++i)
      w.data()[i] = T(rng.normal(0.0, 0.01));
    model.params.add("linear.w", std::move(w));
    model.params.add("linear.b", Tensor<T>::zeros(Shape{1}));
    return model;
  }

  arch.validate();
  const bool convnext = kind == ModelKind::convnext_style;
  const auto& w = arch.widths;
  const int64_t S = arch.stages();

  b.conv("stem.conv", w[0], kStackChannels, 3, 3);
  b.norm("stem.norm", w[0]);

  for (int64_t i = 0; i < S; ++i) {
    if (i > 0) {
      const std::string down = "down" + std::to_string(i);
      if (convnext) {
        b.norm(down + ".norm", w[size_t(i - 1)]);
        b.conv(down + ".conv", w[size_t(i)], w[size_t(i - 1)], 2, 2);
      } else {
        b.conv(down + ".conv", w[size_t(i)], w[size_t(i - 1)], 3, 3);
        b.norm(down + ".norm", w[size_t(i)]);
      }
    }
    for (int64_t j = 0; j < arch.blocks_per_stage; ++j) {
      const std::string prefix =
          "enc" + std::to_string(i) + ".block" + std::to_string(j);
      if (convnext)
        b.convnext_block(prefix, w[size_t(i)]);
      else
        b.residual_block(prefix, w[size_t(i)], w[size_t(i)]);
    }
  }

  for (int64_t i = S - 2; i >= 0; --i) {
    const std::string prefix = "dec" + std::to_string(i);
    const int64_t c_in = w[size_t(i + 1)] + w[size_t(i)];
    if (convnext) {
      b.conv(prefix + ".fuse", w[size_t(i)], c_in, 1, 1);
      b.convnext_block(prefix + ".block0", w[size_t(i)]);
    } else {
      b.residual_block(prefix + ".block0", c_in, w[size_t(i)]);
    }
  }

  if (convnext) {
    b.conv("head.fuse", arch.head_width, w[0], 1, 1);
    b.convnext_block("head.block0", arch.head_width);
  } else {
    b.residual_block("head.block0", w[0], arch.head_width);
  }
  b.conv("head.out", 1, arch.head_width, 1, 1);
  return model;
}

template <typename T>
Tensor<T> linear_forward(const ModelParams<T>& model, const Tensor<T>& input) {
  if (input.shape().ndim() != 4 || input.shape()[1] != kStackChannels)
    throw std::invalid_argument("linear_forward: expected (B,39,H,W) input, got " +
                                input.shape().str());
  return conv2d(input, model.params.at("linear.w"), model.params.at("linear.b"));
}

template <typename T>
Tensor<T> unet_forward(const ModelParams<T>& model, const Tensor<T>& input) {
  if (input.shape().ndim() != 4 || input.shape()[1] != kStackChannels)
    throw std::invalid_argument("unet_forward: expected (B,39,H,W) input, got " +
                                input.shape().str());
  const ArchConfig& arch = model.arch;
  const ParamSet<T>& p = model.params;
  const bool convnext = model.kind == ModelKind::convnext_style;
  const int64_t S = arch.stages();
  const int64_t P = arch.pad_multiple();
  const int64_t rows = input.shape()[2], cols = input.shape()[3];

  // Mirror-pad to the next multiple of P (several passes for small inputs).
  PaddedImage<T> padded =
      mirror_pad_to(input, round_up(rows, P), round_up(cols, P));
  Tensor<T> x = padded.tensor;
  const int64_t top = padded.top, left = padded.left;

  x = run_conv(p, "stem.conv", x, arch.stem_stride, 1);
  x = convnext ? run_ln(p, "stem.norm", x)
               : relu(run_gn(p, "stem.norm", x, arch.gn_groups));

  std::vector<Tensor<T>> skips;
  for (int64_t i = 0; i < S; ++i) {
    if (i > 0) {
      const std::string down = "down" + std::to_string(i);
      if (convnext) {
        x = run_ln(p, down + ".norm", x);
        x = run_conv(p, down + ".conv", x, 2, 0);
      } else {
        x = run_conv(p, down + ".conv", x, 2, 1);
        x = relu(run_gn(p, down + ".norm", x, arch.gn_groups));
      }
    }
    for (int64_t j = 0; j < arch.blocks_per_stage; ++j) {
      const std::string prefix =
          "enc" + std::to_string(i) + ".block" + std::to_string(j);
      x = convnext ? run_convnext_block(p, prefix, x)
                   : run_residual_block(p, prefix, x, arch.gn_groups);
    }
    if (i < S - 1) skips.push_back(x);
  }

  for (int64_t i = S - 2; i >= 0; --i) {
    const std::string prefix = "dec" + std::to_string(i);
    x = upsample2x_nearest(x);
    x = concat_channels(x, skips[size_t(i)]);
    if (convnext) {
      x = run_conv(p, prefix + ".fuse", x);
      x = run_convnext_block(p, prefix + ".block0", x);
    } else {
      x = run_residual_block(p, prefix + ".block0", x, arch.gn_groups);
    }
  }

  if (arch.stem_stride == 2) x = upsample2x_nearest(x);
  if (convnext) {
    x = run_conv(p, "head.fuse", x);
    x = run_convnext_block(p, "head.block0", x);
  } else {
    x = run_residual_block(p, "head.block0", x, arch.gn_groups);
  }
  x = run_conv(p, "head.out", x);
  return crop(x, top, left, rows, cols);
}

template <typename T>
Tensor<T> model_forward(const ModelParams<T>& model, const Tensor<T>& input) {
  if (model.kind == ModelKind::linear) return linear_forward(model, input);
  return unet_forward(model, input);
}

template ModelParams<float> build_model<float>(ModelKind, const ArchConfig&,
                                               uint64_t);
template ModelParams<double> build_model<double>(ModelKind, const ArchConfig&,
                                                 uint64_t);
template Tensor<float> linear_forward<float>(const ModelParams<float>&,
                                             const Tensor<float>&);
template Tensor<double> linear_forward<double>(const ModelParams<double>&,
                                               const Tensor<double>&);
template Tensor<float> unet_forward<float>(const ModelParams<float>&,
                                           const Tensor<float>&);
template Tensor<double> unet_forward<double>(const ModelParams<double>&,
                                             const Tensor<double>&);
template Tensor<float> model_forward<float>(const ModelParams<float>&,
                                            const Tensor<float>&);
template Tensor<double> model_forward<double>(const ModelParams<double>&,
                                              const Tensor<double>&);

}  // namespace heatcast
