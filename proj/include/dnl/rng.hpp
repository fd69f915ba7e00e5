#pragma once

// Counter-based Gaussian draws: every variate is a pure function of
// (seed, trajectory, step, mode, draw), so ensembles are reproducible under
// any sharding of the work and no generator state is carried around.

#include <cmath>
#include <cstdint>

namespace dnl {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct CounterKey {
    std::uint64_t seed = 0;
    std::uint64_t traj = 0;
    std::uint64_t step = 0;
    std::uint64_t mode = 0;
    std::uint64_t draw = 0;
};

inline std::uint64_t counter_bits(const CounterKey& k) {
    std::uint64_t h = mix64(k.seed);
    h = mix64(h ^ k.traj);
    h = mix64(h ^ k.step);
    h = mix64(h ^ k.mode);
    h = mix64(h ^ k.draw);
    return h;
}

inline double uniform01(std::uint64_t bits) {
    return (double(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Box-Muller from two decorrelated counters (draw and draw+1 share the pair).
inline double gaussian(const CounterKey& k) {
    CounterKey k1 = k, k2 = k;
    k1.draw = 2 * k.draw;
    k2.draw = 2 * k.draw + 1;
    double u1 = uniform01(counter_bits(k1));
    double u2 = uniform01(counter_bits(k2));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

} // namespace dnl
