#pragma once

#include <string>
#include <vector>

#include "heatcast/features.hpp"
#include "heatcast/models.hpp"

namespace heatcast {

// Self-describing trained-model bundle: the architecture manifest, the
// normalization statistics baked in at training time, and the parameter
// payload (flat 32-bit little-endian floats in manifest order).
struct Checkpoint {
  ModelParams<float> model;
  NormStats feature_norm;
  float target_mean = 0.0f;
  float target_std = 1.0f;
  std::vector<std::string> layout_names;
  int best_epoch = 0;
  double best_val_mae = 0.0;
};

void save_checkpoint(const std::string& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace heatcast
