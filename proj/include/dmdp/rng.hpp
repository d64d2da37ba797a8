#pragma once

#include <cstdint>

namespace dmdp {

/// splitmix64: 64-bit Weyl-sequence generator with an avalanche output
/// function (Steele, Lea & Flood). Small, fast, and fully specified here,
/// so every run is reproducible from a (seed, stream) pair alone.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t state) : state_(state) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Stateless avalanche of the output function.
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Decorrelated child seed for (seed, stream_id). Derivations nest, so a
    /// stream seed can itself be split into per-task substreams.
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id) {
        return mix(mix(seed + 0x9E3779B97F4A7C15ull) ^
                   mix(stream_id + 0xD6E8FEB86659FD93ull));
    }

    static SplitMix64 stream(std::uint64_t seed, std::uint64_t stream_id) {
        return SplitMix64(derive_seed(seed, stream_id));
    }

  private:
    std::uint64_t state_;
};

inline constexpr const char* kGeneratorName = "splitmix64";

}  // namespace dmdp
