#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace geosched {

// Deterministic RNG used everywhere in the project. We deliberately avoid
// std::mt19937 / std::normal_distribution because their exact output is not
// pinned by the standard; splitmix64 plus an explicit Box-Muller transform
// gives bit-identical streams on every platform and compiler.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1). 53-bit mantissa, so every value is exactly
  // representable and the stream is reproducible bit for bit.
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n). Modulo bias is irrelevant for our n (shuffles of a
  // few thousand elements against a 64-bit stream).
  uint64_t below(uint64_t n) { return n ? next_u64() % n : 0; }

  // Standard normal via Box-Muller. The spare value is cached, which is part
  // of the deterministic stream contract: one seed, one sequence.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double sd) { return mean + sd * gaussian(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent child seed from a master seed and an index.
// Used so that run r, player i, etc. each get their own stream while the
// whole experiment stays a pure function of the master seed.
inline uint64_t derive_seed(uint64_t master, uint64_t index) {
  Rng r(master ^ (0xD1B54A32D192ED03ULL * (index + 1)));
  return r.next_u64();
}

}  // namespace geosched
