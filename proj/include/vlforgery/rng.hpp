#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace vlf {

// splitmix64 finalizer.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seed for item `index` under `root`. Parallel and serial walks over a
// manifest derive the same per-record seed, so their outputs agree.
inline uint64_t derive_seed(uint64_t root, uint64_t index) {
  return mix64(root ^ mix64(index + 0x51ed270b0a1fULL));
}

/// Deterministic RNG. mt19937_64 output is bit-exact across platforms; the
/// reductions below replace the implementation-defined std distributions so
/// sampled values are too.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Unbiased integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Inclusive bounds.
  int range(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<uint64_t>(hi - lo) + 1));
  }

  // [0, 1)
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool flip() { return (next_u64() >> 63) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[below(items.size())];
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vlf
