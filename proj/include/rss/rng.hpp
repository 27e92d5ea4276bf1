#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rss {

// What a random stream is used for. Streams for different purposes never
// share state, so changing one kind of draw leaves the others untouched.
enum class StreamPurpose : std::uint64_t {
  kNbShares = 1,
  kLbPerturbation = 2,
  kNoiseFunctions = 3,
  kExtraEdges = 4,
  kDataset = 5,
  kTrial = 6,
};

// splitmix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t MixSeed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic stream keyed by (master seed, purpose, agent, round).
// mt19937_64 output is fixed by the standard, and the conversions below do
// not go through <random> distributions (whose output is implementation
// defined), so draws are bit-identical across toolchains.
class Stream {
 public:
  Stream(std::uint64_t master, StreamPurpose purpose, std::uint64_t agent,
         std::uint64_t round)
      : engine_(MixSeed(MixSeed(MixSeed(MixSeed(master) ^
                                        static_cast<std::uint64_t>(purpose)) ^
                                agent) ^
                        round)) {}

  // Uniform in [0, 1).
  double Uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  // Standard normal via Box-Muller; one value per call.
  double Normal() {
    double u1 = Uniform01();
    while (u1 <= 0.0) u1 = Uniform01();
    const double u2 = Uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Uniform integer in [lo, hi]; modulo bias is below 2^-50 for small ranges.
  std::int64_t UniformInt(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(engine_() % span);
  }

  std::uint64_t NextU64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rss
