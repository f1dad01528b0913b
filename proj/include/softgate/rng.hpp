#ifndef SOFTGATE_RNG_HPP
#define SOFTGATE_RNG_HPP

#include <cstdint>

namespace softgate {

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stateless generator: every draw is a hash of (seed, step, query, rollout,
/// position), so the order in which rollouts are sampled cannot change the
/// stream.
class CounterRng {
public:
    constexpr explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

    [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t step, std::uint64_t query, std::uint64_t rollout,
                                               std::uint64_t position) const noexcept {
        std::uint64_t h = mix64(seed_);
        h = mix64(h ^ step);
        h = mix64(h ^ query);
        h = mix64(h ^ rollout);
        return mix64(h ^ position);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    [[nodiscard]] constexpr double uniform(std::uint64_t step, std::uint64_t query, std::uint64_t rollout,
                                           std::uint64_t position) const noexcept {
        return static_cast<double>(bits(step, query, rollout, position) >> 11) * 0x1.0p-53;
    }

    [[nodiscard]] constexpr std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

/// A CounterRng pinned to one training step.
class StepRng {
public:
    constexpr StepRng(CounterRng rng, std::uint64_t step) noexcept : rng_(rng), step_(step) {}

    [[nodiscard]] constexpr double uniform(std::uint64_t query, std::uint64_t rollout, std::uint64_t position) const noexcept {
        return rng_.uniform(step_, query, rollout, position);
    }

    [[nodiscard]] constexpr std::uint64_t step() const noexcept { return step_; }

private:
    CounterRng rng_;
    std::uint64_t step_;
};

}  // namespace softgate

#endif  // SOFTGATE_RNG_HPP
