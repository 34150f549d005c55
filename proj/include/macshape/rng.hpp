#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace macshape {

// Counter-friendly splitmix64 generator. Streams derived with stream_seed()
// are independent of thread scheduling, so per-start and per-sample draws
// reproduce bit-identically for a given top-level seed.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1]; safe as a log() argument
    double uniform_pos() { return 1.0 - uniform(); }
};

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 mixer(seed ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL));
    mixer.next();
    return mixer.next();
}

// One standard-normal pair via Box-Muller.
inline void normal_pair(SplitMix64& rng, double& n0, double& n1) {
    const double u1 = rng.uniform_pos();
    const double u2 = rng.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    n0 = r * std::cos(a);
    n1 = r * std::sin(a);
}

// Flat Dirichlet sample on the (n-1)-simplex via exponential spacings.
inline std::vector<double> dirichlet_flat(SplitMix64& rng, int n) {
    std::vector<double> p(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (auto& v : p) {
        v = -std::log(rng.uniform_pos());
        sum += v;
    }
    for (auto& v : p) v /= sum;
    return p;
}

} // namespace macshape
