#pragma once

// Counter-based RNG: every variate is a pure function of
// (seed, stream, counter), so runs are reproducible from a single 64-bit
// seed and any site/chain can be given its own stream.

#include <cmath>
#include <cstdint>

namespace dglab {

struct CounterRng {
    uint64_t seed = 0;

    static uint64_t mix(uint64_t x) { // splitmix64 finaliser
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }
    uint64_t raw(uint64_t stream, uint64_t counter) const {
        uint64_t s = mix(seed ^ (0xa3ec647659359acdULL * (stream + 1)));
        return mix(s + 0x9e3779b97f4a7c15ULL * counter);
    }
    // uniform in [0, 1)
    double uniform(uint64_t stream, uint64_t counter) const {
        return static_cast<double>(raw(stream, counter) >> 11) * 0x1.0p-53;
    }
    // standard normal via Box-Muller on a counter pair
    double normal(uint64_t stream, uint64_t counter) const {
        double u1 = uniform(stream, 2 * counter);
        double u2 = uniform(stream, 2 * counter + 1);
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }
};

} // namespace dglab
