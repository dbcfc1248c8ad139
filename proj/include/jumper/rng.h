#ifndef JUMPER_RNG_H_
#define JUMPER_RNG_H_

#include <cmath>
#include <cstdint>
#include <random>

namespace jumper {

// splitmix64 finalizer; decorrelates adjacent integer seeds.
inline std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded random stream, a pure function of the seed and the call sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(MixSeed(seed)) {}

  // Uniform in [lo, hi).
  double Uniform(double lo, double hi) {
    return lo + (hi - lo) * Unit();
  }

  // Standard normal via Box-Muller (no cached second value).
  double Normal() {
    double u1 = Unit();
    while (u1 <= 0.0) u1 = Unit();
    const double u2 = Unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::uint64_t Next() { return engine_(); }

  // Uniform integer in [0, n).
  std::uint64_t Below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

 private:
  double Unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
};

}  // namespace jumper

#endif  // JUMPER_RNG_H_
