#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "burstdn/image.hpp"
#include "burstdn/rng.hpp"

namespace burstdn {

// Fixed per-sensor calibration; the gain (ISO) is the only runtime knob.
struct SensorCalib {
    double q_e = 1.0;       // quantum efficiency factor
    double sigma0 = 0.0;    // read-noise std per unit gain
    double sigma_adc = 0.0; // amplifier-noise std
};

// Poisson-Gaussian parameters of a raw frame at one gain setting.
struct NoiseParams {
    double sigma_s = 0.0; // signal-dependent coefficient
    double sigma_r = 0.0; // read-noise std
};

inline NoiseParams params_from_gain(const SensorCalib& calib, double gain) {
    if (!(gain > 0.0))
        throw std::invalid_argument("params_from_gain: gain must be positive");
    if (!(calib.q_e > 0.0) || calib.sigma0 < 0.0 || calib.sigma_adc < 0.0)
        throw std::invalid_argument("params_from_gain: bad calibration");
    NoiseParams p;
    p.sigma_s = calib.q_e * gain;
    p.sigma_r = std::sqrt(gain * gain * calib.sigma0 * calib.sigma0 +
                          calib.sigma_adc * calib.sigma_adc);
    return p;
}

// Draws x = sigma_s * Poisson(x*/sigma_s) + N(0, sigma_r^2) per pixel.
// Each pixel owns a counter-based stream, so the output is bit-identical
// for a given (clean, params, seed) regardless of evaluation order.
inline ImagePlane synth_noise(const ImagePlane& clean, NoiseParams params, uint64_t seed) {
    require_domain(clean, Domain::RawLinear, "synth_noise");
    if (params.sigma_s < 0.0 || params.sigma_r < 0.0)
        throw std::invalid_argument("synth_noise: negative noise parameter");

    ImagePlane out(clean.width, clean.height, Domain::RawLinear);
    const bool pure_gaussian = params.sigma_s <= 1e-12;
    const double ss = params.sigma_s;
    const double sr = params.sigma_r;
    for (size_t i = 0; i < clean.size(); ++i) {
        const double x = clean.samples[i];
        if (x < 0.0)
            throw std::invalid_argument("synth_noise: clean sample < 0 at index " +
                                        std::to_string(i));
        PixelRng rng(stream_key(seed, i));
        double v;
        if (pure_gaussian) {
            v = x;
        } else {
            v = ss * static_cast<double>(poisson_draw(x / ss, rng));
        }
        if (sr > 0.0)
            v += sr * rng.gaussian();
        out.samples[i] = static_cast<float>(v);
    }
    return out;
}

// Per-pixel variance estimate from the observed intensity:
// v = sigma_s * max(x, 0) + sigma_r^2.
inline ImagePlane variance_map(const ImagePlane& noisy, NoiseParams params) {
    require_domain(noisy, Domain::RawLinear, "variance_map");
    ImagePlane out(noisy.width, noisy.height, Domain::RawLinear);
    const float ss = static_cast<float>(params.sigma_s);
    const float r2 = static_cast<float>(params.sigma_r * params.sigma_r);
    for (size_t i = 0; i < noisy.size(); ++i)
        out.samples[i] = ss * std::max(noisy.samples[i], 0.0f) + r2;
    return out;
}

// Published calibration tables. "kpn" is keyed by gain, "crvd" by gain with
// the corresponding ISO recorded (ISO = 1600 * gain).
struct CalibEntry {
    double gain;
    int iso; // 0 when the table is gain-only
    NoiseParams params;
};

inline const std::vector<CalibEntry>& preset_table(std::string_view name) {
    static const std::vector<CalibEntry> kpn = {
        {1.0, 0, {2.7e-3, 6.8e-3}},
        {2.0, 0, {6.2e-3, 1.5e-2}},
        {4.0, 0, {1.4e-2, 3.6e-2}},
        {8.0, 0, {3.3e-2, 8.3e-2}},
    };
    static const std::vector<CalibEntry> crvd = {
        {1.0, 1600, {8.6e-4, 8.4e-4}},
        {2.0, 3200, {1.7e-3, 1.5e-3}},
        {4.0, 6400, {3.3e-3, 2.8e-3}},
        {8.0, 12800, {6.5e-3, 5.4e-3}},
        {16.0, 25600, {1.3e-2, 1.0e-2}},
    };
    if (name == "kpn") return kpn;
    if (name == "crvd") return crvd;
    throw std::invalid_argument("preset_table: unknown preset '" + std::string(name) +
                                "' (expected kpn or crvd)");
}

inline NoiseParams preset_params(std::string_view name, double gain) {
    const auto& table = preset_table(name);
    for (const auto& e : table)
        if (std::abs(e.gain - gain) < 1e-9)
            return e.params;
    std::string gains;
    for (const auto& e : table)
        gains += (gains.empty() ? "" : ", ") + std::to_string(e.gain);
    throw std::invalid_argument("preset_params: gain " + std::to_string(gain) +
                                " not in preset '" + std::string(name) + "' (have " + gains + ")");
}

} // namespace burstdn
