#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "burstdn/burst.hpp"
#include "burstdn/homography.hpp"
#include "burstdn/image.hpp"
#include "burstdn/noise.hpp"
#include "burstdn/rng.hpp"

namespace burstdn {

enum class MotionKind { TranslationOnly, TranslationPlusRotation };

struct SynthConfig {
    int n_frames = 8;
    double shift_min = 2.0;
    double shift_max = 16.0;
    MotionKind motion = MotionKind::TranslationOnly;
    double max_rotation_deg = 1.0; // used by TranslationPlusRotation
    std::string preset = "kpn";    // kpn | crvd | custom
    double gain = 4.0;
    NoiseParams custom_params{1e-13, 0.0}; // used when preset == "custom"
    uint64_t seed = 1;

    NoiseParams noise_params() const {
        if (preset == "custom")
            return custom_params;
        return preset_params(preset, gain);
    }
};

struct GroundTruthMotion {
    double dx = 0.0;
    double dy = 0.0;
    double angle_deg = 0.0;
    Homography h; // reference coords -> alternate coords
};

struct SynthResult {
    Burst burst;
    std::vector<GroundTruthMotion> motions; // one per alternate
};

namespace detail {

inline double lattice_value(uint64_t seed, int octave, int ix, int iy) {
    const uint64_t key = stream_key(seed, (static_cast<uint64_t>(octave) << 42) ^
                                              (static_cast<uint64_t>(ix & 0x1FFFFF) << 21) ^
                                              static_cast<uint64_t>(iy & 0x1FFFFF));
    PixelRng rng(key);
    return 2.0 * rng.uniform() - 1.0;
}

inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// one octave of value noise at the given lattice spacing
inline double value_noise(uint64_t seed, int octave, double x, double y, double spacing) {
    const double gx = x / spacing, gy = y / spacing;
    const int ix = static_cast<int>(std::floor(gx));
    const int iy = static_cast<int>(std::floor(gy));
    const double u = smoothstep(gx - ix);
    const double v = smoothstep(gy - iy);
    const double v00 = lattice_value(seed, octave, ix, iy);
    const double v10 = lattice_value(seed, octave, ix + 1, iy);
    const double v01 = lattice_value(seed, octave, ix, iy + 1);
    const double v11 = lattice_value(seed, octave, ix + 1, iy + 1);
    return (v00 * (1 - u) + v10 * u) * (1 - v) + (v01 * (1 - u) + v11 * u) * v;
}

} // namespace detail

// Deterministic non-periodic test scene in [0.02, 0.82]: multi-octave value
// noise. Coarse octaves keep structure alive at the top pyramid levels while
// fine octaves provide tile-level detail.
inline ImagePlane make_test_texture(int w, int h, uint64_t seed) {
    static const double kSpacing[] = {64.0, 32.0, 16.0, 8.0, 4.0, 2.0};
    static const double kAmp[] = {0.5, 0.4, 0.45, 0.6, 0.7, 0.45};
    ImagePlane img(w, h, Domain::RawLinear);
    double lo = 1e30, hi = -1e30;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = 0.0;
            for (int o = 0; o < 6; ++o)
                v += kAmp[o] * detail::value_noise(seed, o, x, y, kSpacing[o]);
            img.at(x, y) = static_cast<float>(v);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const double scale = 0.8 / std::max(hi - lo, 1e-9);
    for (auto& s : img.samples)
        s = static_cast<float>(0.02 + (s - lo) * scale);
    return img;
}

namespace detail {

inline Homography motion_homography(double dx, double dy, double angle_deg, double cx,
                                    double cy) {
    const double rad = angle_deg * 3.14159265358979323846 / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    Homography h;
    h.m = {c, -s, cx - c * cx + s * cy + dx, s, c, cy - s * cx - c * cy + dy, 0, 0, 1};
    return h;
}

} // namespace detail

// Builds a burst around `clean`: each alternate is the scene under a seeded
// random motion with displacement magnitude uniform in [shift_min, shift_max]
// (bilinear warp), then every frame gets Poisson-Gaussian noise. The motions
// map reference coordinates into each alternate, so an aligner's recovered
// flow can be scored against them directly.
inline SynthResult synth_burst(const ImagePlane& clean, const SynthConfig& cfg) {
    require_domain(clean, Domain::RawLinear, "synth_burst");
    for (float v : clean.samples)
        if (v < 0.0f)
            throw std::invalid_argument("synth_burst: clean image must be non-negative");
    if (cfg.n_frames < 1)
        throw std::invalid_argument("synth_burst: need at least one frame");
    if (cfg.shift_min < 0.0 || cfg.shift_max < cfg.shift_min)
        throw std::invalid_argument("synth_burst: bad shift range");
    if (cfg.shift_max * 2.0 > std::min(clean.width, clean.height))
        throw std::invalid_argument("synth_burst: shift range too large for " +
                                    std::to_string(clean.width) + "x" +
                                    std::to_string(clean.height));

    const NoiseParams params = cfg.noise_params();
    SynthResult out;
    out.burst.params = params;
    out.burst.layout = BayerLayout::Gray;
    out.burst.reference = synth_noise(clean, params, stream_key(cfg.seed, 0));

    const double cx = 0.5 * (clean.width - 1);
    const double cy = 0.5 * (clean.height - 1);
    for (int j = 1; j < cfg.n_frames; ++j) {
        PixelRng rng(stream_key(cfg.seed, 0x300000ULL + j));
        const double mag = cfg.shift_min + rng.uniform() * (cfg.shift_max - cfg.shift_min);
        const double theta = 6.2831853071795865 * rng.uniform();
        GroundTruthMotion motion;
        motion.dx = mag * std::cos(theta);
        motion.dy = mag * std::sin(theta);
        if (cfg.motion == MotionKind::TranslationPlusRotation)
            motion.angle_deg = (2.0 * rng.uniform() - 1.0) * cfg.max_rotation_deg;
        motion.h = detail::motion_homography(motion.dx, motion.dy, motion.angle_deg, cx, cy);

        // alt(q) = clean(h^-1(q)) so that alt(h(p)) = clean(p)
        ImagePlane moved = warp_homography(clean, motion.h.inverse());
        out.burst.alternates.push_back(
            synth_noise(moved, params, stream_key(cfg.seed, 0x600000ULL + j)));
        out.motions.push_back(motion);
    }
    return out;
}

} // namespace burstdn
