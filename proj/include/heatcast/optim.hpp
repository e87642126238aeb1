#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "heatcast/nn.hpp"

namespace heatcast {

// Plain gradient step, w <- w - lr * g. Parameters without a gradient
// buffer are left unchanged.
void sgd_step(ParamSet<float>& params, float lr);

struct AdamWConfig {
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float weight_decay = 0.01f;
};

// First/second moment accumulators, aligned with the parameter order.
struct AdamWState {
  int64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;

  static AdamWState init(const ParamSet<float>& params);
};

// Decoupled weight decay: w <- w - lr*wd*w independently of the
// bias-corrected adaptive step.
void adamw_step(ParamSet<float>& params, AdamWState& state, float lr,
                const AdamWConfig& cfg);

// Global L2-norm gradient clipping; max_norm <= 0 disables it.
void clip_grad_norm(ParamSet<float>& params, float max_norm);

// Halves the learning rate after `patience` consecutive epochs without the
// monitored metric improving on its best by more than min_delta; the
// patience counter resets on each decay.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, int patience = 20, double factor = 0.5,
                   double min_delta = 1e-4)
      : lr_(initial_lr),
        patience_(patience),
        factor_(factor),
        min_delta_(min_delta) {}

  // Feed one epoch's validation metric; returns the lr for the next epoch.
  double observe(double metric) {
    if (metric < best_ - min_delta_) {
      best_ = metric;
      bad_epochs_ = 0;
    } else {
      ++bad_epochs_;
      if (bad_epochs_ >= patience_) {
        lr_ *= factor_;
        bad_epochs_ = 0;
      }
    }
    return lr_;
  }

  double lr() const { return lr_; }
  double best() const { return best_; }

 private:
  double lr_;
  int patience_;
  double factor_;
  double min_delta_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
};

}  // namespace heatcast
