#pragma once

#include <cstdint>
#include <limits>

namespace loyalda {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream identifiers. Each agent draws from its own stream so that the order
/// in which unrelated agents are queried never changes each other's values.
enum class StreamKind : std::uint64_t {
  kDoctor = 1,
  kHospital = 2,
  kNextPolicy = 3,
  kQueueOrder = 4,
  kTrial = 5,
  kSweepRun = 6,
  kVerifySample = 7,
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, StreamKind kind, std::uint64_t index) {
  return mix64(seed ^ mix64((static_cast<std::uint64_t>(kind) << 56) ^ mix64(index)));
}

/// SplitMix64 generator; satisfies UniformRandomBitGenerator.
class Stream {
 public:
  using result_type = std::uint64_t;

  constexpr Stream() = default;
  constexpr explicit Stream(std::uint64_t seed) : state_(seed) {}
  constexpr Stream(std::uint64_t seed, StreamKind kind, std::uint64_t index)
      : state_(derive_seed(seed, kind, index)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound). Lemire's multiply-shift with rejection, so
  /// results are identical on every platform (unlike std distributions).
  std::uint64_t below(std::uint64_t bound) {
    std::uint64_t x = (*this)();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<unsigned __int128>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_ = 0;
};

}  // namespace loyalda
