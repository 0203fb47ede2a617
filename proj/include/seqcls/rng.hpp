#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace seqcls {

// xoshiro256++ with splitmix64 seeding. Self-contained so that streams are
// reproducible across standard library implementations; std::normal_distribution
// makes no such guarantee.
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

    // Uniform in [0, 1) with 53 bits of randomness.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
    int uniform_int(int n) {
        const uint64_t bound = static_cast<uint64_t>(n);
        const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return static_cast<int>(r % bound);
    }

    // Standard normal via Box-Muller; caches the second draw.
    double gaussian() {
        if (spare_valid_) {
            spare_valid_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        spare_valid_ = true;
        return r * std::cos(theta);
    }

    double gaussian(double mean, double std) { return mean + std * gaussian(); }

    // Derives a named sub-stream seed from a master seed. Every stochastic
    // subsystem (data, init, augment, folds, ...) draws from its own stream so
    // that changing one subsystem's consumption does not perturb the others.
    static uint64_t derive(uint64_t master, std::string_view label) {
        uint64_t h = 0xcbf29ce484222325ull; // FNV-1a
        for (char ch : label) {
            h ^= static_cast<unsigned char>(ch);
            h *= 0x100000001b3ull;
        }
        uint64_t x = master ^ h;
        return splitmix64(x);
    }

    static uint64_t derive(uint64_t master, std::string_view label, uint64_t index) {
        uint64_t x = derive(master, label) ^ (0x9e3779b97f4a7c15ull * (index + 1));
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

    uint64_t state_[4];
    double spare_ = 0.0;
    bool spare_valid_ = false;
};

} // namespace seqcls
