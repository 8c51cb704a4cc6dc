#ifndef GERBERA_RNG_HPP
#define GERBERA_RNG_HPP

#include <cstdint>
#include <vector>

namespace gerbera {

// Deterministic RNG used everywhere seeds matter (init, shuffles, dropout,
// synthetic data). Wraps splitmix64 so the produced streams do not depend
// on the standard library's distribution implementations; identical seeds
// give identical streams on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n) {
    // Rejection sampling keeps the draw unbiased.
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Derives an independent child stream; used to give each task / each
  // epoch its own seed without correlating the draws.
  uint64_t fork_seed() { return next_u64(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (size_t i = v.size() - 1; i > 0; --i) {
      size_t j = static_cast<size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  uint64_t state_;
};

}  // namespace gerbera

#endif  // GERBERA_RNG_HPP
