#pragma once

#include <string>
#include <vector>

namespace heatcast {

struct VerificationItem {
  std::string name;
  double max_rel_err = 0.0;
  size_t coords_checked = 0;
  bool pass = false;
};

struct VerificationReport {
  double tolerance = 1e-4;
  std::vector<VerificationItem> items;

  bool all_pass() const {
    for (const auto& item : items)
      if (!item.pass) return false;
    return !items.empty();
  }
};

// Central finite-difference checks (64-bit) of every differentiable
// primitive and of the full mini U-Net with both backbones on a 39x16x16
// input. Probes are placed away from non-smooth points.
VerificationReport run_gradient_verification(double tolerance = 1e-4);

}  // namespace heatcast
