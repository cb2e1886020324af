#pragma once

#include <cstdint>

namespace diter {

/// SplitMix64. Streams for sub-components are derived with split(), so adding
/// a consumer never shifts the draws seen by another.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) { return static_cast<std::uint64_t>(uniform() * bound); }

    bool bernoulli(double p) { return uniform() < p; }

    SplitMix64 split(std::uint64_t stream) const {
        SplitMix64 mixer(state_ ^ (stream * 0xd1b54a32d192ed03ull));
        return SplitMix64(mixer.next());
    }

private:
    std::uint64_t state_;
};

}  // namespace diter
