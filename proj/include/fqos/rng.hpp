#pragma once

// Seeded randomness for deterministic simulations.
//
// Every consumer draws from a named stream derived from the master seed, so
// adding or removing an entity never perturbs another entity's draws.  All
// samplers are implemented here (rather than via std::*_distribution) because
// the standard leaves distribution algorithms unspecified and we promise
// byte-identical outputs for identical configs.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

namespace fqos {

// SplitMix64 finalizer; good avalanche, used to whiten seed material.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a over a name, for stable stream ids independent of insertion order.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// A single random stream.  mt19937_64 is fully specified by the standard, so
// identical seeds give identical raw draws on every conforming platform.
class rng_stream {
  public:
    explicit rng_stream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // Uniform in [0, 1): 53 mantissa bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]: never zero, safe under log().
    double uniform_pos() {
        return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller with a cached spare.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Poisson count by summing unit-rate exponentials until the budget `mean`
    // is exhausted.  O(mean) but free of the underflow that kills the
    // product-of-uniforms form at large means, and exact for any mean >= 0.
    long poisson(double mean) {
        if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
        if (mean == 0.0) return 0;
        double acc = 0.0;
        long k = -1;
        while (acc <= mean) {
            acc += -std::log(uniform_pos());
            ++k;
        }
        return k;
    }

    // Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("below: empty range");
        // Rejection sampling to avoid modulo bias.
        std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Stream factory: stream id is a pure function of (master seed, name).
inline rng_stream named_stream(std::uint64_t master_seed, std::string_view name) {
    return rng_stream(splitmix64(master_seed ^ fnv1a64(name)));
}

}  // namespace fqos
