// rng.hpp — seeded, substream-capable random number generation
//
// Trajectory k of a run with master seed s draws from stream(s, k).
// Streams are deterministic: identical (seed, k) reproduce the draws
// bit for bit, independent of threading.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace nshops {

struct SeedSpec {
    std::uint64_t master = 0;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
} // namespace detail

class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
        std::uint64_t s = master_seed ^ (0x632BE59BD9B4E019ULL * (stream_index + 1));
        std::seed_seq seq{detail::splitmix64(s), detail::splitmix64(s),
                          detail::splitmix64(s), detail::splitmix64(s)};
        engine_.seed(seq);
    }

    explicit RngStream(SeedSpec seed, std::uint64_t stream_index = 0)
        : RngStream(seed.master, stream_index) {}

    std::uint64_t raw() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Two independent standard normals via Box-Muller; avoids
    // std::normal_distribution, whose output is not portable.
    void normal_pair(double& a, double& b) {
        const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; // (0,1]
        const double u2 = uniform01();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 6.283185307179586476925286766559 * u2;
        a = rad * std::cos(ang);
        b = rad * std::sin(ang);
    }

    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double a, b;
        normal_pair(a, b);
        cached_ = b;
        has_cached_ = true;
        return a;
    }

    // Circular complex normal with E[z z*] = 1 and E[z z] = 0.
    std::complex<double> complex_normal() {
        double a, b;
        normal_pair(a, b);
        return {a * 0.7071067811865475244, b * 0.7071067811865475244};
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace nshops
