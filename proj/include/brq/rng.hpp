#pragma once

#include <cstdint>

namespace brq {

// Counter-based uniform generator. Each stream is identified by a 64-bit
// key; the i-th output is a pure function of (key, i), so substreams can be
// handed to workers in any order without affecting the draws.
namespace rng_detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

} // namespace rng_detail

// Derives the stream key for one episode from the master seed.
inline std::uint64_t substream_key(std::uint64_t master_seed, std::uint64_t episode_index) {
    using namespace rng_detail;
    return mix64(mix64(master_seed + kGamma) ^ mix64(episode_index + 0x632BE59BD9B4E019ULL));
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0)
        : key_(key), counter_(counter) {}

    static CounterRng for_episode(std::uint64_t master_seed, std::uint64_t episode_index) {
        return CounterRng(substream_key(master_seed, episode_index));
    }

    std::uint64_t next_u64() {
        using namespace rng_detail;
        return mix64(key_ + (counter_++) * kGamma);
    }

    // Uniform on the open interval (0, 1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

} // namespace brq
