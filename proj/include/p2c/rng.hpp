#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace p2c {

// splitmix64 finalizer; used to derive independent stream seeds from
// (seed, step, purpose) tuples so no RNG state ever has to be serialized.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

// mt19937_64 plus hand-rolled double/normal/index draws. The standard
// <random> distributions are not used: their algorithms (and therefore the
// exact streams) are implementation-defined, and normal_distribution caches
// a spare value that would have to survive checkpoint round trips.
class Rng {
public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // [0, 1), 53-bit mantissa
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller without the cached spare; two raw draws per sample.
  double normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Unbiased index in [0, n) by rejection.
  std::size_t index(std::size_t n) {
    uint64_t threshold = (~uint64_t(0) / n) * n;
    uint64_t v;
    do {
      v = eng_();
    } while (v >= threshold);
    return std::size_t(v % n);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 eng_;
};

}  // namespace p2c
