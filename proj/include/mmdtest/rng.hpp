#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mmdtest {

// Deterministic generator with explicitly specified output mapping.
// std::normal_distribution is implementation-defined, which would break the
// bit-identical-output contract of sample(), so the uniform->normal
// transform is spelled out here (Box-Muller with a cached spare).
//
// State advance is splitmix64; streams for (seed, index...) are derived by
// feeding each index through one mixing round, so replicate/trial streams
// are independent of scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x9E3779B97F4A7C15ull)) {}

    static Rng derive(std::uint64_t seed, std::uint64_t a) {
        Rng r(seed);
        r.state_ = mix(r.state_ ^ mix(a + 0xA0761D6478BD642Full));
        r.has_spare_ = false;
        return r;
    }

    static Rng derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
        Rng r = derive(seed, a);
        r.state_ = mix(r.state_ ^ mix(b + 0xE7037ED1A0B428DBull));
        r.has_spare_ = false;
        return r;
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    // uniform on [0, 1), 53-bit resolution
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform on (0, 1], safe as a log argument
    double uniform01_open_left() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u = uniform01_open_left();
        const double v = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double a = 2.0 * std::numbers::pi * v;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // uniform index in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // multiply-shift; bias is < 2^-64 per draw, irrelevant at Monte Carlo scale
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mmdtest
