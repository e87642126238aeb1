#include "heatcast/verify.hpp"

#include "heatcast/features.hpp"
#include "heatcast/gradcheck.hpp"
#include "heatcast/models.hpp"
#include "heatcast/rng.hpp"

namespace heatcast {

namespace {

Tensor<double> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0,
                             double hi = 1.0) {
  Tensor<double> t = Tensor<double>::zeros(shape);
  for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.uniform(lo, hi);
  return t;
}

// Fixed random projection turns a tensor-valued op into a scalar loss.
Tensor<double> project(const Tensor<double>& out, const Tensor<double>& proj) {
  return sum(mul(out, proj));
}

struct Suite {
  VerificationReport report;

  template <typename Fn>
  void check(const std::string& name, Fn&& fn,
             std::vector<std::pair<std::string, Tensor<double>>> inputs,
             int max_coords = 48) {
    GradCheckReport r =
        grad_check(std::forward<Fn>(fn), std::move(inputs), 1e-4, max_coords);
    report.items.push_back(VerificationItem{
        name, r.max_rel_err, r.coords_checked, r.pass(report.tolerance)});
  }
};

}  // namespace

VerificationReport run_gradient_verification(double tolerance) {
  Suite suite;
  suite.report.tolerance = tolerance;
  Rng rng(20240915);

  {
    auto x = random_tensor(Shape{2, 3, 6, 7}, rng);
    auto w = random_tensor(Shape{4, 3, 3, 3}, rng);
    auto b = random_tensor(Shape{4}, rng);
    auto proj = random_tensor(Shape{2, 4, 6, 7}, rng);
    suite.check(
        "conv2d 3x3 pad1",
        [&]() { return project(conv2d(x, w, b, Conv2dOpts{1, 1, 1}), proj); },
        {{"x", x}, {"w", w}, {"b", b}});
  }
  {
    auto x = random_tensor(Shape{1, 4, 9, 9}, rng);
    auto w = random_tensor(Shape{6, 4, 3, 3}, rng);
    auto b = random_tensor(Shape{6}, rng);
    auto proj = random_tensor(Shape{1, 6, 4, 4}, rng);
    suite.check(
        "conv2d 3x3 stride2",
        [&]() { return project(conv2d(x, w, b, Conv2dOpts{2, 0, 1}), proj); },
        {{"x", x}, {"w", w}, {"b", b}});
  }
  {
    auto x = random_tensor(Shape{1, 6, 8, 8}, rng);
    auto w = random_tensor(Shape{6, 1, 7, 7}, rng);
    auto b = random_tensor(Shape{6}, rng);
    auto proj = random_tensor(Shape{1, 6, 8, 8}, rng);
    suite.check(
        "conv2d depthwise 7x7",
        [&]() { return project(conv2d(x, w, b, Conv2dOpts{1, 3, 6}), proj); },
        {{"x", x}, {"w", w}, {"b", b}});
  }
  {
    auto x = random_tensor(Shape{1, 2, 5, 6}, rng);
    auto proj = random_tensor(Shape{1, 2, 12, 14}, rng);
    suite.check(
        "mirror_pad",
        [&]() { return project(mirror_pad(x, 12, 14), proj); }, {{"x", x}});
  }
  {
    auto x = random_tensor(Shape{1, 3, 8, 8}, rng);
    auto proj = random_tensor(Shape{1, 3, 4, 5}, rng);
    suite.check("crop", [&]() { return project(crop(x, 2, 1, 4, 5), proj); },
                {{"x", x}});
  }
  {
    auto x = random_tensor(Shape{2, 3, 4, 4}, rng);
    auto proj = random_tensor(Shape{2, 3, 8, 8}, rng);
    suite.check(
        "upsample2x_nearest",
        [&]() { return project(upsample2x_nearest(x), proj); }, {{"x", x}});
  }
  {
    auto a = random_tensor(Shape{1, 3, 5, 5}, rng);
    auto b = random_tensor(Shape{1, 2, 5, 5}, rng);
    auto proj = random_tensor(Shape{1, 5, 5, 5}, rng);
    suite.check(
        "concat_channels",
        [&]() { return project(concat_channels(a, b), proj); },
        {{"a", a}, {"b", b}});
  }
  {
    // probe away from the kink at 0
    auto x = random_tensor(Shape{2, 4, 6, 6}, rng);
    for (int64_t i = 0; i < x.numel(); ++i)
      x.data()[i] += x.data()[i] >= 0 ? 0.2 : -0.2;
    auto proj = random_tensor(Shape{2, 4, 6, 6}, rng);
    suite.check("relu", [&]() { return project(relu(x), proj); }, {{"x", x}});
  }
  {
    auto x = random_tensor(Shape{2, 4, 6, 6}, rng, -2.0, 2.0);
    auto proj = random_tensor(Shape{2, 4, 6, 6}, rng);
    suite.check("gelu", [&]() { return project(gelu(x), proj); }, {{"x", x}});
  }
  {
    auto a = random_tensor(Shape{2, 3, 4, 4}, rng);
    auto b = random_tensor(Shape{2, 3, 4, 4}, rng);
    auto proj = random_tensor(Shape{2, 3, 4, 4}, rng);
    suite.check("add", [&]() { return project(add(a, b), proj); },
                {{"a", a}, {"b", b}});
    suite.check("mul", [&]() { return project(mul(a, b), proj); },
                {{"a", a}, {"b", b}});
  }
  {
    auto x = random_tensor(Shape{2, 8, 5, 5}, rng);
    auto gamma = random_tensor(Shape{8}, rng, 0.5, 1.5);
    auto beta = random_tensor(Shape{8}, rng, -0.5, 0.5);
    auto proj = random_tensor(Shape{2, 8, 5, 5}, rng);
    suite.check(
        "group_norm",
        [&]() { return project(group_norm(x, gamma, beta, 4), proj); },
        {{"x", x}, {"gamma", gamma}, {"beta", beta}});
  }
  {
    auto x = random_tensor(Shape{2, 6, 4, 4}, rng);
    auto gamma = random_tensor(Shape{6}, rng, 0.5, 1.5);
    auto beta = random_tensor(Shape{6}, rng, -0.5, 0.5);
    auto proj = random_tensor(Shape{2, 6, 4, 4}, rng);
    suite.check(
        "layer_norm_channels",
        [&]() { return project(layer_norm_channels(x, gamma, beta), proj); },
        {{"x", x}, {"gamma", gamma}, {"beta", beta}});
  }
  {
    auto pred = random_tensor(Shape{3, 1, 6, 6}, rng, 10.0, 20.0);
    std::vector<double> target(size_t(3 * 6 * 6));
    std::vector<uint8_t> mask(target.size(), 0);
    for (size_t i = 0; i < target.size(); ++i) {
      target[i] = rng.uniform(10.0, 20.0);
      mask[i] = rng.bernoulli(0.3) ? 1 : 0;
    }
    // leave sample 2 with no valid pixel: it must contribute no gradient
    for (size_t i = 2 * 36; i < 3 * 36; ++i) mask[i] = 0;
    suite.check(
        "masked_mse",
        [&]() { return masked_mse(pred, target, mask).loss; },
        {{"pred", pred}});
  }

  // Full mini U-Net, both backbones, on a 39x16x16 input.
  for (ModelKind kind : {ModelKind::resnet_style, ModelKind::convnext_style}) {
    ArchConfig arch;
    arch.widths = {8, 8, 8, 8};
    arch.blocks_per_stage = 1;
    arch.head_width = 8;
    ModelParams<double> model = build_model<double>(kind, arch, 7);

    Rng data_rng(99);
    auto x = random_tensor(Shape{1, kStackChannels, 16, 16}, data_rng);
    std::vector<double> target(size_t(16 * 16));
    std::vector<uint8_t> mask(target.size(), 0);
    for (size_t i = 0; i < target.size(); ++i) {
      target[i] = data_rng.uniform(-1.0, 1.0);
      mask[i] = data_rng.bernoulli(0.15) ? 1 : 0;
    }

    std::vector<std::pair<std::string, Tensor<double>>> inputs;
    inputs.emplace_back("input", x);
    for (const auto& item : model.params)
      inputs.emplace_back(item.name, item.tensor);

    suite.check(
        "mini u-net " + to_string(kind),
        [&]() { return masked_mse(unet_forward(model, x), target, mask).loss; },
        std::move(inputs), 6);
  }

  return suite.report;
}

}  // namespace heatcast
