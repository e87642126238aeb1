#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "heatcast/autograd.hpp"
#include "heatcast/rng.hpp"

namespace heatcast {

struct GradCheckReport {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  size_t coords_checked = 0;
  std::string worst_site;

  bool pass(double tol) const { return max_rel_err < tol; }
};

// Central-difference check of reverse-mode gradients, 64-bit only. fn must
// recompute the scalar loss from the inputs' current values; large tensors
// are probed at a deterministic random subset of coordinates.
template <typename Fn>
GradCheckReport grad_check(Fn&& fn,
                           std::vector<std::pair<std::string, Tensor<double>>> inputs,
                           double h = 1e-4, int max_coords_per_tensor = 48,
                           uint64_t seed = 1234) {
  for (auto& [name, t] : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }

  std::vector<std::vector<double>> analytic;
  {
    Tape<double> tape;
    typename Tape<double>::Scope scope(tape);
    Tensor<double> loss = fn();
    tape.backward(loss);
  }
  for (auto& [name, t] : inputs) {
    if (t.has_grad())
      analytic.push_back(t.grad());
    else
      analytic.push_back(std::vector<double>(size_t(t.numel()), 0.0));
  }

  GradCheckReport report;
  Rng rng(seed);
  for (size_t k = 0; k < inputs.size(); ++k) {
    auto& [name, t] = inputs[k];
    const int64_t n = t.numel();
    std::vector<int64_t> coords;
    if (n <= max_coords_per_tensor) {
      coords.resize(size_t(n));
      for (int64_t i = 0; i < n; ++i) coords[size_t(i)] = i;
    } else {
      std::set<int64_t> picked;
      while (int(picked.size()) < max_coords_per_tensor)
        picked.insert(rng.uniform_int(0, n - 1));
      coords.assign(picked.begin(), picked.end());
    }

    for (int64_t idx : coords) {
      double* v = t.data() + idx;
      const double saved = *v;
      auto central = [&](double step) {
        *v = saved + step;
        const double f_plus = fn().item();
        *v = saved - step;
        const double f_minus = fn().item();
        *v = saved;
        return (f_plus - f_minus) / (2.0 * step);
      };
      const double a = analytic[k][size_t(idx)];
      auto rel = [&](double numeric) {
        const double abs_err = std::abs(a - numeric);
        if (abs_err < 1e-8) return 0.0;  // below finite-difference noise
        return abs_err / std::max(1e-6, std::abs(a) + std::abs(numeric));
      };
      double numeric = central(h);
      double rel_err = rel(numeric);
      // A large mismatch that disappears under a smaller step means the
      // window straddled a non-smooth point (ReLU kink); step away from it.
      for (double shrink : {16.0, 256.0}) {
        if (rel_err <= 1e-4) break;
        numeric = central(h / shrink);
        rel_err = rel(numeric);
      }
      ++report.coords_checked;
      report.max_abs_err = std::max(report.max_abs_err, std::abs(a - numeric));
      if (rel_err > report.max_rel_err) {
        report.max_rel_err = rel_err;
        report.worst_site = name + "[" + std::to_string(idx) + "] analytic=" +
                            std::to_string(a) + " numeric=" +
                            std::to_string(numeric);
      }
    }
  }
  return report;
}

}  // namespace heatcast
