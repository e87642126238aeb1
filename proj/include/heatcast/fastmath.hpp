#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>

namespace heatcast {

// Branch-free float exp, relative error ~2e-7. Used by the float GELU path
// where libm calls dominate; the double path keeps libm exactness.
inline float fast_expf(float x) {
  if (x > 88.0f) x = 88.0f;
  if (x < -88.0f) x = -88.0f;
  const float t = x * 1.4426950408889634f;  // x / ln 2
  const float fi = std::floor(t);
  const float f = t - fi;
  // 2^f on [0,1), degree-5 minimax
  const float p =
      1.0f +
      f * (0.6931471805f +
           f * (0.2402265069f +
                f * (0.0555041087f + f * (0.0096181291f + f * 0.0013333558f))));
  const int32_t i = int32_t(fi);
  uint32_t bits;
  float scale;
  bits = uint32_t(i + 127) << 23;
  std::memcpy(&scale, &bits, 4);
  return p * scale;
}

// Abramowitz-Stegun 7.1.26 with the caller-supplied exp(-x^2) factor;
// absolute error below 1.5e-7.
inline float fast_erff_with_exp(float x, float exp_neg_x2) {
  const float sign = x < 0.0f ? -1.0f : 1.0f;
  const float ax = sign * x;
  const float t = 1.0f / (1.0f + 0.3275911f * ax);
  const float poly =
      t * (0.254829592f +
           t * (-0.284496736f +
                t * (1.421413741f + t * (-1.453152027f + t * 1.061405429f))));
  return sign * (1.0f - poly * exp_neg_x2);
}

}  // namespace heatcast
