#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace heatcast {

// Deterministic RNG with pinned output. The standard distributions are
// implementation-defined, so uniform/normal are implemented here to make
// every sampled artifact byte-reproducible across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) { set_state(splitmix(seed)); }

  // Independent stream derived from a seed and a list of tags
  // (e.g. {date_serial, epoch}); streams never collide for distinct tags.
  static Rng stream(uint64_t seed, std::initializer_list<uint64_t> tags) {
    uint64_t s = splitmix(seed);
    for (uint64_t t : tags) s = splitmix(s ^ (t + 0x9e3779b97f4a7c15ULL));
    Rng r(0);
    r.set_state(s);
    return r;
  }

  uint64_t next_u64() {
    // xorshift64* on a splitmix-seeded state
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545f4914f6cdd1dULL;
  }

  // uniform in [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [lo, hi] inclusive
  int64_t uniform_int(int64_t lo, int64_t hi) {
    return lo + int64_t(next_u64() % uint64_t(hi - lo + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; the spare value is cached so the stream stays deterministic.
  double normal(double mean = 0.0, double std = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + std * spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return mean + std * r * std::cos(theta);
  }

 private:
  void set_state(uint64_t s) {
    // xorshift needs a nonzero state
    state_ = s ? s : 0x9e3779b97f4a7c15ULL;
  }

  static uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  uint64_t state_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace heatcast
