#pragma once

#include <array>
#include <cstdint>

namespace sparsegen {

// xoshiro256** seeded through splitmix64. Same seed gives the same stream
// on every platform; state is held by value so generators can be passed
// around explicitly and never shared.
struct rng64 {
    std::array<uint64_t, 4> state;

    explicit rng64(uint64_t seed) {
        uint64_t x = seed;
        for (auto & s : state) {
            x += 0x9E3779B97F4A7C15ULL;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            s = z ^ (z >> 31);
        }
        if ((state[0] | state[1] | state[2] | state[3]) == 0) {
            state[0] = 1;
        }
    }

    static uint64_t rotl(uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    uint64_t next() {
        const uint64_t result = rotl(state[1] * 5, 7) * 9;
        const uint64_t t = state[1] << 17;
        state[2] ^= state[0];
        state[3] ^= state[1];
        state[1] ^= state[2];
        state[0] ^= state[3];
        state[2] ^= t;
        state[3] = rotl(state[3], 45);
        return result;
    }

    // uniform in [0, 1), 53-bit resolution
    double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // uniform integer in [0, n); modulo bias is O(n/2^64)
    uint64_t below(uint64_t n) {
        return next() % n;
    }
};

} // namespace sparsegen
