#pragma once

// Deterministic random streams.
//
// Every trial draws from its own stream, derived from (master seed, stream tag, trial index)
// by hashing. A trial's randomness is therefore fixed by its index alone, and batch results do
// not depend on how trials are partitioned across workers.

#include <cstdint>
#include <limits>

namespace trbell {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// SplitMix64 generator; satisfies UniformRandomBitGenerator.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit constexpr RandomStream(std::uint64_t state) noexcept : state_(state) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    // Uniform integer in [0, n) for small n.
    int below(int n) noexcept { return static_cast<int>(uniform() * n); }

    // +1 or -1 with equal probability.
    int sign() noexcept { return ((*this)() >> 63) ? 1 : -1; }

private:
    std::uint64_t state_;
};

// Tags keep streams of different experiments disjoint under a shared master seed.
enum class StreamTag : std::uint64_t {
    Forward = 1,
    Reversed = 2,
    Modified = 3,
    Attack = 4,
    Audit = 5,
    Optimizer = 6,
};

constexpr RandomStream trial_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index) noexcept {
    const std::uint64_t base = mix64(seed ^ mix64(static_cast<std::uint64_t>(tag) * 0xd1b54a32d192ed03ULL));
    return RandomStream(mix64(base + mix64(index + 0x632be59bd9b4e019ULL)));
}

}  // namespace trbell
