#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace fairflow {

/// Deterministic generator (splitmix64-seeded xoshiro256++) with hand-rolled
/// normal and Poisson transforms, so identical seeds give identical streams
/// on every platform and standard library.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
        spare_valid_ = false;
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (cached second draw).
    double normal() {
        if (spare_valid_) {
            spare_valid_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        spare_valid_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    /// Poisson by CDF inversion; large rates split by additivity.
    int64_t poisson(double lambda) {
        if (lambda < 0.0) throw std::invalid_argument("poisson rate must be >= 0");
        if (lambda == 0.0) return 0;
        int64_t total = 0;
        while (lambda > 50.0) {
            total += poisson_small(50.0);
            lambda -= 50.0;
        }
        return total + poisson_small(lambda);
    }

    /// Stable derivation of independent sub-streams.
    static uint64_t derive(uint64_t seed, uint64_t a, uint64_t b = 0) {
        uint64_t x = seed ^ (a * 0x9e3779b97f4a7c15ull) ^ (b * 0xbf58476d1ce4e5b9ull);
        return splitmix64(x);
    }

private:
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    int64_t poisson_small(double lambda) {
        const double u = uniform();
        double pmf = std::exp(-lambda);
        double cdf = pmf;
        int64_t k = 0;
        while (u >= cdf && k < 4096) {
            ++k;
            pmf *= lambda / static_cast<double>(k);
            cdf += pmf;
        }
        return k;
    }

    uint64_t state_[4];
    double spare_ = 0.0;
    bool spare_valid_ = false;
};

}  // namespace fairflow
