#pragma once

#include <cmath>
#include <cstdint>

namespace burstdn {

// Counter-based random streams. Every pixel (or sample) derives its own
// generator from (seed, index), so results are bit-identical no matter how
// the surrounding loop is scheduled.

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives an independent stream key for element `index` of stream `seed`.
inline uint64_t stream_key(uint64_t seed, uint64_t index) {
    uint64_t s = seed ^ (index * 0xD1B54A32D192ED03ULL + 0x9E3779B97F4A7C15ULL);
    return splitmix64(s);
}

class PixelRng {
public:
    explicit PixelRng(uint64_t key) : state_(key) {}

    uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in (0, 1]; never returns 0 so log() stays finite.
    double uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Box-Muller; consumes two uniforms per call.
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(6.283185307179586477 * u2);
    }

private:
    uint64_t state_;
};

namespace detail {

inline long poisson_inversion(double mean, PixelRng& rng) {
    double u = rng.uniform();
    double p = std::exp(-mean);
    double f = p;
    long k = 0;
    // mean < 10 here, so the tail cap is far beyond any realistic draw
    const long cap = static_cast<long>(mean + 40.0 * std::sqrt(mean) + 100.0);
    while (u > f && k < cap) {
        ++k;
        p *= mean / static_cast<double>(k);
        f += p;
    }
    return k;
}

// Transformed rejection with squeeze (Hormann's PTRS), valid for mean >= 10.
inline long poisson_ptrs(double mean, PixelRng& rng) {
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);

    for (;;) {
        double u = rng.uniform() - 0.5;
        double v = rng.uniform();
        double us = 0.5 - std::fabs(u);
        double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r)
            return static_cast<long>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us))
            continue;
        double k = kf;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            k * log_mean - mean - std::lgamma(k + 1.0))
            return static_cast<long>(kf);
    }
}

} // namespace detail

// Seeded Poisson draw; inversion for small means, PTRS above.
inline long poisson_draw(double mean, PixelRng& rng) {
    if (mean <= 0.0)
        return 0;
    if (mean < 10.0)
        return detail::poisson_inversion(mean, rng);
    return detail::poisson_ptrs(mean, rng);
}

} // namespace burstdn
