#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fragcoag {

// Seed mixing.  Replica r of a run with master seed s draws from an independent
// mt19937_64 stream seeded with derive_seed(s, r), so results do not depend on
// scheduling order across threads.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
    return splitmix64(master ^ splitmix64(counter + 0x632be59bd9b4e019ull));
}

// mt19937_64 wrapper with hand-rolled variate transforms.  std::uniform_real_distribution
// and friends are not bit-stable across standard libraries; these are, which keeps
// trajectories and CSV output reproducible on any platform for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    // uniform in [0, 1) with 53-bit resolution
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Exp(rate) by inversion; rejects u == 0 so the result is always finite
    double exponential(double rate) {
        double u;
        do {
            u = uniform();
        } while (u <= 0.0);
        return -std::log(u) / rate;
    }

    // unbiased integer in [0, n), n >= 1, via bitmask rejection
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        std::uint64_t mask = ~0ull >> __builtin_clzll(n - 1);
        std::uint64_t v;
        do {
            v = eng_() & mask;
        } while (v >= n);
        return v;
    }

private:
    std::mt19937_64 eng_;
};

} // namespace fragcoag
