#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace golomb {

// Deterministic RNG wrapper. std::mt19937_64 is specified bit-exactly by the
// standard; the distributions below are hand-rolled because the standard
// library distribution objects are implementation-defined and would break
// seed reproducibility across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of entropy.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; one value per call, cache holds the pair's second half.
  double normal(double mean = 0.0, double std_dev = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + std_dev * spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.28318530717958647692 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return mean + std_dev * (r * std::cos(theta));
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Modulo bias is negligible for n << 2^64 and keeps the draw count fixed.
    return gen_() % n;
  }

  template <typename Vec>
  void shuffle(Vec& v) {
    if (v.empty()) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// FNV-1a; used to derive per-item seeds from a base seed plus a string id so
// parallel generation stays independent of scheduling.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, const std::string& id) {
  std::uint64_t h = fnv1a(id);
  // splitmix64 finalizer to decorrelate nearby bases
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace golomb
