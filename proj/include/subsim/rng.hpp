#ifndef SUBSIM_RNG_HPP
#define SUBSIM_RNG_HPP

#include <cstdint>
#include <random>

namespace subsim {

/// Random stream with portable variate generation.
///
/// The engine (mt19937_64) is fully specified by the standard; the uniform
/// and Gaussian transforms are implemented here instead of relying on
/// std::*_distribution, whose output is implementation-defined. A stream
/// seeded with the same key therefore produces the same sequence on any
/// platform, which is what makes fixed-seed runs reproducible across
/// builds and thread counts.
class RngStream {
public:
    RngStream() : RngStream(0) {}

    explicit RngStream(std::uint64_t seed) { reseed(seed); }

    RngStream(std::uint64_t seed, std::uint64_t d0, std::uint64_t d1, std::uint64_t d2) {
        reseed(derive_key(seed, d0, d1, d2));
    }

    void reseed(std::uint64_t key) {
        std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                          0x9e3779b9u, 0x7f4a7c15u};
        engine_.seed(seq);
        has_spare_ = false;
    }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Marsaglia polar; caches the spare deviate.
    double normal() {
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
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    std::uint64_t raw() { return engine_(); }

    /// Mixes (seed, d0, d1, d2) into one 64-bit key (splitmix64 absorption).
    /// Used to hand out independent substreams keyed by e.g. (level, chain).
    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t d0, std::uint64_t d1,
                                    std::uint64_t d2) {
        std::uint64_t s = seed;
        s = splitmix(s ^ (0x632be59bd9b4e019ULL + d0));
        s = splitmix(s ^ d1);
        s = splitmix(s ^ d2);
        return s;
    }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace subsim

#endif
