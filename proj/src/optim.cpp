#include "heatcast/optim.hpp"

#include <cmath>

namespace heatcast {

void sgd_step(ParamSet<float>& params, float lr) {
  for (auto& item : params) {
    if (!item.tensor.has_grad()) continue;
    float* w = item.tensor.data();
    const float* g = item.tensor.grad().data();
    const int64_t n = item.tensor.numel();
    for (int64_t i = 0; i < n; ++i) w[i] -= lr * g[i];
  }
}

AdamWState AdamWState::init(const ParamSet<float>& params) {
  AdamWState state;
  state.m.reserve(params.size());
  state.v.reserve(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    state.m.emplace_back(size_t(params[i].tensor.numel()), 0.0f);
    state.v.emplace_back(size_t(params[i].tensor.numel()), 0.0f);
  }
  return state;
}

void adamw_step(ParamSet<float>& params, AdamWState& state, float lr,
                const AdamWConfig& cfg) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(double(cfg.beta1), double(state.step));
  const double bc2 = 1.0 - std::pow(double(cfg.beta2), double(state.step));
  for (size_t k = 0; k < params.size(); ++k) {
    Tensor<float>& t = params[k].tensor;
    float* w = t.data();
    const float* g = t.has_grad() ? t.grad().data() : nullptr;
    float* m = state.m[k].data();
    float* v = state.v[k].data();
    const int64_t n = t.numel();
    for (int64_t i = 0; i < n; ++i) {
      const float gi = g ? g[i] : 0.0f;
      // decay is decoupled from the adaptive step
      w[i] -= lr * cfg.weight_decay * w[i];
      m[i] = cfg.beta1 * m[i] + (1.0f - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0f - cfg.beta2) * gi * gi;
      const float m_hat = float(double(m[i]) / bc1);
      const float v_hat = float(double(v[i]) / bc2);
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

void clip_grad_norm(ParamSet<float>& params, float max_norm) {
  if (max_norm <= 0.0f) return;
  double total = 0.0;
  for (auto& item : params) {
    if (!item.tensor.has_grad()) continue;
    for (float g : item.tensor.grad()) total += double(g) * double(g);
  }
  const double norm = std::sqrt(total);
  if (norm <= double(max_norm)) return;
  const float scale = float(double(max_norm) / norm);
  for (auto& item : params) {
    if (!item.tensor.has_grad()) continue;
    for (float& g : item.tensor.grad()) g *= scale;
  }
}

}  // namespace heatcast
