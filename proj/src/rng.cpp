#include "cptrl/rng.hpp"

namespace cptrl {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

RngStream::RngStream(std::uint64_t seed) : id_(mix_seed(seed, 0)), engine_(id_) {}

RngStream::RngStream(std::uint64_t seed, std::uint64_t counter, StreamRole role)
    : id_(mix_seed(mix_seed(seed, counter), static_cast<std::uint64_t>(role))), engine_(id_) {}

RngStream RngStream::substream(std::uint64_t key) const {
    RngStream child(0);
    child.id_ = mix_seed(id_, key);
    child.engine_.seed(child.id_);
    return child;
}

}  // namespace cptrl
