#pragma once

#include <cstdint>
#include <vector>

#include "heatcast/checkpoint.hpp"
#include "heatcast/dataset.hpp"
#include "heatcast/models.hpp"
#include "heatcast/tensor.hpp"

namespace heatcast {

struct TrainConfig {
  int batch_size = 32;
  double lr = 1e-3;          // deep default; the linear model uses SGD at 0.1
  double weight_decay = 0.01;
  int plateau_patience = 20;
  double plateau_factor = 0.5;
  int early_stop_patience = 50;
  double min_delta = 1e-4;
  int max_epochs = 200;
  uint64_t seed = 42;
  double grad_clip = 0.0;  // 0 disables
  AugmentConfig augment;
  int train_year_min = 2018;
  int train_year_max = 2021;
  int val_year = 2022;
  int test_year = 2023;

  static double default_lr(ModelKind kind) {
    return kind == ModelKind::linear ? 0.1 : 1e-3;
  }
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;  // masked MSE on normalized targets
  double val_mae = 0.0;     // degC
  double lr = 0.0;
};

struct FitResult {
  Checkpoint best;
  std::vector<EpochLog> history;
};

// Shuffled mini-batch training with masked MSE, per-epoch validation MAE
// driving the plateau scheduler and early stopping; returns the checkpoint
// with the best validation MAE.
FitResult fit(const Dataset& data, ModelKind kind, const ArchConfig& arch,
              const TrainConfig& cfg);

// Run the model on a raw (unnormalized) stack; returns the map in degC,
// shape (1,1,rows,cols).
Tensor<float> predict_map(const Checkpoint& ckpt, const FeatureStack& stack);

void write_history_csv(const std::string& path,
                       const std::vector<EpochLog>& history);

}  // namespace heatcast
