#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qlimits {

// SplitMix64 step; used both as a seed scrambler and for stream derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream id for replication r of experiment e under a master seed.
//
//   stream(master, e, r) = splitmix64(splitmix64(splitmix64(master) ^ e) ^ r)
//
// This mapping is part of the output contract: reports are reproducible from
// (master seed, experiment id, replication index) alone, and replications can
// be executed in any order or on any number of threads without changing the
// bytes that get written.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t experiment,
                                   std::uint64_t replication) {
    return splitmix64(splitmix64(splitmix64(master) ^ experiment) ^ replication);
}

// Deterministic random stream.  All variate generation is implemented here
// (rather than with std::*_distribution) so that sequences are identical
// across standard library implementations.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on (0,1]; never returns 0 so that log(u) is always finite.
    double uniform() {
        return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // Box-Muller with one cached value per stream.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection-free modulo is fine here: n is tiny relative to 2^64 in
        // every use in this codebase, so the bias is < 2^-32.
        return gen_() % n;
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace qlimits
