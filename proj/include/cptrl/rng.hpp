#pragma once

#include <cstdint>
#include <random>

namespace cptrl {

// Roles of the substreams drawn inside one optimizer iteration. Each role
// gets its own generator so the order in which trajectories are simulated
// cannot change the result.
enum class StreamRole : std::uint64_t {
    Perturb = 1,
    TrajPlus = 2,
    TrajMinus = 3,
    TrajCenter = 4,
    Test = 5,
    Baseline = 6,
    Sampling = 7,
    Train = 8,
};

// SplitMix64 finalizer applied to a combination of two words.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

/// Deterministic random stream identified by a 64-bit id.
///
/// Streams are derived from (seed, counter, role) tuples by hashing, so any
/// stream can be reconstructed from its coordinates without replaying the
/// streams that preceded it. Satisfies UniformRandomBitGenerator.
class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed);
    RngStream(std::uint64_t seed, std::uint64_t counter, StreamRole role);

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t id() const noexcept { return id_; }

    // Child stream keyed by `key`; independent of this stream's position.
    RngStream substream(std::uint64_t key) const;

private:
    std::uint64_t id_;
    std::mt19937_64 engine_;
};

}  // namespace cptrl
