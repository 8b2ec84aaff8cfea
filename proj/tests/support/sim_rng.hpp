#pragma once

// Self-contained deterministic RNG for the Monte Carlo reference runs:
// xoshiro256++ for uniform bits and a 128-layer ziggurat for standard
// normals. Kept independent of <random> so that frozen reference values
// do not depend on the standard library implementation.

#include <cmath>
#include <cstdint>

namespace simrng {

class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    // splitmix64 expansion of the seed
    std::uint64_t z = seed;
    for (auto& w : state_) {
      z += 0x9e3779b97f4a7c15ull;
      std::uint64_t t = z;
      t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ull;
      t = (t ^ (t >> 27)) * 0x94d049bb133111ebull;
      w = t ^ (t >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform on (0,1]
  double uniform_pos() { return (double)((next() >> 11) + 1) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

// Marsaglia-Tsang ziggurat with 128 layers, 53-bit mantissas.
class ZigguratNormal {
 public:
  explicit ZigguratNormal(std::uint64_t seed) : rng_(seed) {
    const double m = 9007199254740992.0;  // 2^53
    double dn = kR, tn = kR;
    const double vn = 9.91256303526217e-3;
    double q = vn / std::exp(-0.5 * dn * dn);
    kn_[0] = (std::uint64_t)((dn / q) * m);
    kn_[1] = 0;
    wn_[0] = q / m;
    wn_[127] = dn / m;
    fn_[0] = 1.0;
    fn_[127] = std::exp(-0.5 * dn * dn);
    for (int i = 126; i >= 1; --i) {
      dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
      kn_[i + 1] = (std::uint64_t)((dn / tn) * m);
      tn = dn;
      fn_[i] = std::exp(-0.5 * dn * dn);
      wn_[i] = dn / m;
    }
  }

  double operator()() {
    for (;;) {
      const std::uint64_t bits = rng_.next();
      const unsigned iz = bits & 127u;
      // signed 54-bit integer from the top bits
      const std::int64_t hz =
          (std::int64_t)(bits >> 10) - (std::int64_t)9007199254740992ll;
      const std::int64_t ahz = hz < 0 ? -hz : hz;
      if ((std::uint64_t)ahz < kn_[iz]) return (double)hz * wn_[iz];

      double x = (double)hz * wn_[iz];
      if (iz == 0) {
        // tail beyond R
        double y;
        do {
          x = -std::log(rng_.uniform_pos()) / kR;
          y = -std::log(rng_.uniform_pos());
        } while (y + y < x * x);
        return hz > 0 ? kR + x : -kR - x;
      }
      if (fn_[iz] + rng_.uniform_pos() * (fn_[iz - 1] - fn_[iz]) <
          std::exp(-0.5 * x * x))
        return x;
      // rejected; resample from scratch
    }
  }

 private:
  static constexpr double kR = 3.442619855899;
  Xoshiro256pp rng_;
  std::uint64_t kn_[128];
  double wn_[128], fn_[128];
};

}  // namespace simrng
