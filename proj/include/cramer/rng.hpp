#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace cramer {

/// SplitMix64 (Steele, Lea and Flood). Small, fast and fully specified, so
/// seeded streams are identical on every platform.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  /// Stream `index` of the family keyed by `seed`.
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 mixer(seed ^ (index * 0xD1B54A32D192ED03ULL));
    return SplitMix64(mixer.next() ^ index);
  }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer uniform on [lo, hi].
  std::uint64_t integer(std::uint64_t lo, std::uint64_t hi) {
    return lo + next() % (hi - lo + 1);
  }

  /// Index drawn from a probability vector by inversion.
  std::size_t categorical(std::span<const double> probabilities) {
    const double u = uniform();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      cumulative += probabilities[i];
      if (u < cumulative) {
        return i;
      }
    }
    // Rounding left u above the final cumulative sum: take the last
    // positive entry.
    for (std::size_t i = probabilities.size(); i-- > 0;) {
      if (probabilities[i] > 0.0) {
        return i;
      }
    }
    return probabilities.size() - 1;
  }

private:
  std::uint64_t state_;
};

} // namespace cramer
