#pragma once

#include <cmath>
#include <cstdint>

namespace rotsync {

/// Counter-based, platform-stable PRNG built on the SplitMix64 mixer.
///
/// A stream is keyed by (seed, k1, k2); draws advance an internal counter and
/// hash it, so two streams with the same key produce identical sequences
/// regardless of what other streams were consumed in between. This is what
/// makes generated instances reproducible and noise blocks order-independent.
class Prng {
 public:
  explicit Prng(std::uint64_t seed, std::uint64_t k1 = 0, std::uint64_t k2 = 0)
      : state_(mix(mix(seed) ^ mix(k1 ^ 0x9e3779b97f4a7c15ULL) ^
                   mix(k2 ^ 0xbf58476d1ce4e5b9ULL))) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform draw in [0, 1).
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal draw (Box-Muller; consumes exactly two uniforms per pair).
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rotsync
