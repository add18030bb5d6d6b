#pragma once

#include <cstdint>
#include <initializer_list>

namespace gkps {

// splitmix64; used both as a seed mixer and to expand seeds into engine state.
inline std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Collapse a key tuple into one 64-bit stream id. Order-sensitive.
inline std::uint64_t mix_key(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t s = seed;
    std::uint64_t acc = splitmix64(s);
    for (std::uint64_t p : parts) {
        s = acc ^ (p + 0x9e3779b97f4a7c15ULL + (acc << 6) + (acc >> 2));
        acc = splitmix64(s);
    }
    return acc;
}

// xoshiro256++ (Blackman/Vigna, public domain reference implementation).
class Xoshiro256pp {
  public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed = 1) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

// Module ids for stream derivation (documented in README).
enum StreamModule : std::uint64_t {
    kStreamLinkSim = 1,
    kStreamSteane = 2,
    kStreamGermFixtures = 3,
    kStreamRoundwise = 4,
};

inline std::uint64_t distance_key(double l_km) {
    // quantized to 1 nm so that textually equal config distances share streams
    return static_cast<std::uint64_t>(l_km * 1e12 + 0.5);
}

inline Xoshiro256pp make_stream(std::uint64_t master_seed,
                                std::initializer_list<std::uint64_t> parts) {
    return Xoshiro256pp(mix_key(master_seed, parts));
}

}  // namespace gkps
