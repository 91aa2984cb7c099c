#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace mrdro {

// Deterministic sampler built on a fixed xoshiro-style generator so that
// streams are reproducible across standard libraries.  std::normal_distribution
// is implementation-defined, which would break the seed-determinism contract.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        // splitmix64 expansion of the seed into generator state
        std::uint64_t z = seed;
        for (auto& word : state_) {
            z += 0x9e3779b97f4a7c15ULL;
            std::uint64_t t = z;
            t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ULL;
            t = (t ^ (t >> 27)) * 0x94d049bb133111ebULL;
            word = t ^ (t >> 31);
        }
    }

    std::uint64_t next_u64() {
        // xoshiro256++
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

    // Uniform on [0, 1)
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via polar Box-Muller; caches the spare deviate.
    double normal01() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double normal(double mean, double sd) { return mean + sd * normal01(); }

    double lognormal(double log_mean, double log_sd) {
        return std::exp(normal(log_mean, log_sd));
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4] = {};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

struct BadTruncation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rejection sampling with a fixed attempt budget; the truncation semantics
// are exact (no renormalized inverse CDF).
inline double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi,
                               int max_attempts = 1000) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        const double draw = rng.normal(mean, sd);
        if (draw >= lo && draw <= hi) return draw;
    }
    throw BadTruncation("truncated_normal: no draw in [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "] after " + std::to_string(max_attempts) +
                        " attempts (mean " + std::to_string(mean) + ", sd " +
                        std::to_string(sd) + ")");
}

}  // namespace mrdro
