#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cs2 {

// splitmix64: used only to derive well-separated substream seeds from a
// master seed plus purpose/index tags, so that parallel Monte Carlo runs are
// reproducible regardless of scheduling.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag,
                                 std::uint64_t index = 0) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s ^= tag * 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64(s);
    s ^= index + 0x632be59bd9b4e019ULL;
    std::uint64_t c = splitmix64(s);
    return a ^ (b + (c << 1));
}

// Deterministic RNG: mt19937_64 (output sequence fixed by the C++ standard)
// with hand-rolled uniform/normal transforms, because the std::*_distribution
// classes are implementation-defined and would break bit-reproducibility
// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1): 53-bit mantissa construction.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Integer in [lo, hi] via rejection-free scaling (bias < 2^-53 for the
    // small ranges used here).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const double u = uniform();
        auto span = static_cast<double>(hi - lo + 1);
        auto k = static_cast<std::int64_t>(u * span);
        if (k > hi - lo) k = hi - lo;
        return lo + k;
    }

    // Standard normal via Box-Muller; caches the second variate.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace cs2
