#pragma once

#include <cmath>
#include <cstdint>

namespace voidforge {

// 64-bit avalanche finalizer (splitmix64). Every seeded stream in the forge
// derives from this mixer so replaying a (master_seed, index) pair is
// reproducible across platforms.
constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

constexpr std::uint64_t avalanche64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

// mix64(a, b): combine a seed and a stream/index word into a new 64-bit seed.
// Defined as the splitmix64 update applied to a after advancing by (b+1)
// gammas; (b+1) keeps index 0 distinct from the raw seed.
constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return avalanche64(a + kGoldenGamma * (b + 1));
}

// Sequential splitmix64 stream for sampler-style code.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += kGoldenGamma;
        return avalanche64(state_);
    }

    // uniform in [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    bool chance(double p) { return next_double() < p; }

  private:
    std::uint64_t state_;
};

// Counter-based generation: a value is a pure function of (seed, counters),
// no stream state. Used for noise volumes where pixel (t, p, c) must be
// addressable independently.
constexpr std::uint64_t counter_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                    std::uint64_t c) {
    std::uint64_t h = mix64(seed, a);
    h = mix64(h, b);
    h = mix64(h, c);
    return h;
}

inline double u64_to_unit_open(std::uint64_t h) {
    // (0, 1] so log() below is safe
    return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two decorrelated halves of the key.
inline double counter_normal(std::uint64_t seed, std::uint64_t frame, std::uint64_t pixel,
                             std::uint64_t channel) {
    const std::uint64_t h = counter_key(seed, frame, pixel, channel);
    const double u1 = u64_to_unit_open(h);
    const double u2 = u64_to_unit_open(avalanche64(h ^ 0xD1B54A32D192ED03ull));
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace voidforge
