#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "heatcast/nn.hpp"
#include "heatcast/tensor.hpp"

namespace heatcast {

enum class ModelKind { linear, resnet_style, convnext_style };

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind kind);

// Desk-scale encoder/decoder configuration shared by both deep backbones.
struct ArchConfig {
  std::vector<int64_t> widths{32, 64, 128, 256};
  int64_t blocks_per_stage = 2;
  int64_t stem_stride = 2;   // 1 or 2
  int64_t head_width = 32;
  int64_t gn_groups = 8;

  int64_t stages() const { return int64_t(widths.size()); }
  // Inputs are mirror-padded up to the next multiple of this.
  int64_t pad_multiple() const { return int64_t(1) << (stages() + 1); }
  void validate() const;
};

// Named parameter tensors plus the config that produced them; parameter
// names and shapes are fully determined by (kind, arch).
template <typename T>
struct ModelParams {
  ModelKind kind = ModelKind::linear;
  ArchConfig arch;
  ParamSet<T> params;
};

// He-style fan-in initialization for conv weights, zero biases, unit norm
// gains; deterministic in the seed.
template <typename T>
ModelParams<T> build_model(ModelKind kind, const ArchConfig& arch,
                           uint64_t seed);

template <typename T>
int64_t param_count(const ModelParams<T>& model) {
  return model.params.total_scalars();
}

// input (B,39,H,W) -> temperature map (B,1,H,W); identical spatial shape.
template <typename T>
Tensor<T> model_forward(const ModelParams<T>& model, const Tensor<T>& input);

// Shared per-pixel affine map, w in R^39 plus a bias (40 parameters).
template <typename T>
Tensor<T> linear_forward(const ModelParams<T>& model, const Tensor<T>& input);

// Mirror-pad to the pad multiple, encoder/decoder with skip connections,
// head block + 1x1 conv, crop back to the input window.
template <typename T>
Tensor<T> unet_forward(const ModelParams<T>& model, const Tensor<T>& input);

}  // namespace heatcast
