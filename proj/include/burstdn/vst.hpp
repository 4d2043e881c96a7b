#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "burstdn/image.hpp"
#include "burstdn/noise.hpp"
#include "burstdn/rng.hpp"

namespace burstdn {

// Parameters of the stabilization family in gain-normalized units.
struct VstParams {
    double sigma_s = 1.0;
    double acute_sigma_sq = 0.0; // (sigma_r / sigma_s)^2
    double gauss_mean = 0.0;     // mean of the additive Gaussian component

    static VstParams from_noise(NoiseParams p) {
        if (!(p.sigma_s > 0.0))
            throw std::invalid_argument("VstParams: sigma_s must be positive");
        VstParams v;
        v.sigma_s = p.sigma_s;
        v.acute_sigma_sq = (p.sigma_r / p.sigma_s) * (p.sigma_r / p.sigma_s);
        return v;
    }
};

enum class VstKind { FreemanTukey, GAT, KSigma, Identity };

inline ImagePlane gain_normalize(const ImagePlane& x, NoiseParams p) {
    require_domain(x, Domain::RawLinear, "gain_normalize");
    if (!(p.sigma_s > 0.0))
        throw std::invalid_argument("gain_normalize: sigma_s must be positive");
    ImagePlane out(x.width, x.height, Domain::GainNormalized);
    const float inv = static_cast<float>(1.0 / p.sigma_s);
    for (size_t i = 0; i < x.size(); ++i)
        out.samples[i] = x.samples[i] * inv;
    return out;
}

inline ImagePlane gain_denormalize(const ImagePlane& xa, NoiseParams p) {
    require_domain(xa, Domain::GainNormalized, "gain_denormalize");
    if (!(p.sigma_s > 0.0))
        throw std::invalid_argument("gain_denormalize: sigma_s must be positive");
    ImagePlane out(xa.width, xa.height, Domain::RawLinear);
    const float s = static_cast<float>(p.sigma_s);
    for (size_t i = 0; i < xa.size(); ++i)
        out.samples[i] = xa.samples[i] * s;
    return out;
}

namespace detail {

// Scalar maps of the root-type family. Negative radicands (read noise can
// push samples below zero) clamp to 0, keeping the maps total and monotone.
inline double ft_scalar(double z, double s2, double g) {
    double lo = z + s2 - g;
    double hi = z + 1.0 + s2 - g;
    return std::sqrt(std::max(lo, 0.0)) + std::sqrt(std::max(hi, 0.0));
}

inline double gat_scalar(double z, double s2, double g) {
    return 2.0 * std::sqrt(std::max(z + 0.375 + s2 - g, 0.0));
}

inline double bartlett_scalar(double z) { return 2.0 * std::sqrt(std::max(z + 0.5, 0.0)); }
inline double root_scalar(double z) { return 2.0 * std::sqrt(std::max(z, 0.0)); }

} // namespace detail

inline ImagePlane ft_forward(const ImagePlane& xa, const VstParams& vp) {
    require_domain(xa, Domain::GainNormalized, "ft_forward");
    ImagePlane out(xa.width, xa.height, Domain::Vst);
    for (size_t i = 0; i < xa.size(); ++i)
        out.samples[i] = static_cast<float>(
            detail::ft_scalar(xa.samples[i], vp.acute_sigma_sq, vp.gauss_mean));
    return out;
}

// Algebraic inverse of ft_forward composed with gain_normalize:
// x = ((y^4 - 2y^2 + 1) / (4y^2) - acute_sigma_sq + g) * sigma_s.
inline ImagePlane ft_inverse(const ImagePlane& y, const VstParams& vp, NoiseParams p) {
    require_domain(y, Domain::Vst, "ft_inverse");
    ImagePlane out(y.width, y.height, Domain::RawLinear);
    const double s2 = vp.acute_sigma_sq;
    const double g = vp.gauss_mean;
    const double ss = p.sigma_s;
    for (size_t i = 0; i < y.size(); ++i) {
        const double yy = y.samples[i];
        if (!(yy > 0.0))
            throw std::invalid_argument("ft_inverse: sample <= 0 at index " + std::to_string(i));
        const double q = (yy * yy - 1.0) / (2.0 * yy);
        out.samples[i] = static_cast<float>((q * q - s2 + g) * ss);
    }
    return out;
}

inline ImagePlane gat_forward(const ImagePlane& xa, const VstParams& vp) {
    require_domain(xa, Domain::GainNormalized, "gat_forward");
    ImagePlane out(xa.width, xa.height, Domain::Vst);
    for (size_t i = 0; i < xa.size(); ++i)
        out.samples[i] = static_cast<float>(
            detail::gat_scalar(xa.samples[i], vp.acute_sigma_sq, vp.gauss_mean));
    return out;
}

inline ImagePlane gat_inverse(const ImagePlane& y, const VstParams& vp, NoiseParams p) {
    require_domain(y, Domain::Vst, "gat_inverse");
    ImagePlane out(y.width, y.height, Domain::RawLinear);
    const double s2 = vp.acute_sigma_sq;
    const double g = vp.gauss_mean;
    const double ss = p.sigma_s;
    for (size_t i = 0; i < y.size(); ++i) {
        const double yy = y.samples[i];
        out.samples[i] = static_cast<float>((yy * yy * 0.25 - 0.375 - s2 + g) * ss);
    }
    return out;
}

// Affine gain stabilization: f_k(x) = x / sigma_s + sigma_r^2 / sigma_s^2.
// Removes the gain dependence only; Poisson brightness dependence remains.
inline ImagePlane k_sigma_forward(const ImagePlane& x, NoiseParams p) {
    require_domain(x, Domain::RawLinear, "k_sigma_forward");
    if (!(p.sigma_s > 0.0))
        throw std::invalid_argument("k_sigma_forward: sigma_s must be positive");
    ImagePlane out(x.width, x.height, Domain::Vst);
    const double inv = 1.0 / p.sigma_s;
    const double off = (p.sigma_r / p.sigma_s) * (p.sigma_r / p.sigma_s);
    for (size_t i = 0; i < x.size(); ++i)
        out.samples[i] = static_cast<float>(x.samples[i] * inv + off);
    return out;
}

inline ImagePlane k_sigma_inverse(const ImagePlane& y, NoiseParams p) {
    require_domain(y, Domain::Vst, "k_sigma_inverse");
    if (!(p.sigma_s > 0.0))
        throw std::invalid_argument("k_sigma_inverse: sigma_s must be positive");
    ImagePlane out(y.width, y.height, Domain::RawLinear);
    const double off = (p.sigma_r / p.sigma_s) * (p.sigma_r / p.sigma_s);
    for (size_t i = 0; i < y.size(); ++i)
        out.samples[i] = static_cast<float>((y.samples[i] - off) * p.sigma_s);
    return out;
}

// Full forward/inverse dispatch used by the pipeline.
inline ImagePlane vst_forward(VstKind kind, const ImagePlane& raw, NoiseParams p) {
    switch (kind) {
    case VstKind::FreemanTukey:
        return ft_forward(gain_normalize(raw, p), VstParams::from_noise(p));
    case VstKind::GAT:
        return gat_forward(gain_normalize(raw, p), VstParams::from_noise(p));
    case VstKind::KSigma:
        return k_sigma_forward(raw, p);
    case VstKind::Identity: {
        require_domain(raw, Domain::RawLinear, "vst_forward");
        ImagePlane out = raw;
        out.domain = Domain::Vst;
        return out;
    }
    }
    throw std::invalid_argument("vst_forward: bad kind");
}

inline ImagePlane vst_inverse(VstKind kind, const ImagePlane& y, NoiseParams p) {
    switch (kind) {
    case VstKind::FreemanTukey:
        return ft_inverse(y, VstParams::from_noise(p), p);
    case VstKind::GAT:
        return gat_inverse(y, VstParams::from_noise(p), p);
    case VstKind::KSigma:
        return k_sigma_inverse(y, p);
    case VstKind::Identity: {
        require_domain(y, Domain::Vst, "vst_inverse");
        ImagePlane out = y;
        out.domain = Domain::RawLinear;
        return out;
    }
    }
    throw std::invalid_argument("vst_inverse: bad kind");
}

// Transform selector for the flatness profiler. Bartlett and the plain root
// are profiling baselines only; they have no inverse and never appear in the
// pipeline.
enum class ProfileTransform { FreemanTukey, Gat, KSigma, Identity, Bartlett, Root };

inline ProfileTransform profile_transform(VstKind kind) {
    switch (kind) {
    case VstKind::FreemanTukey: return ProfileTransform::FreemanTukey;
    case VstKind::GAT: return ProfileTransform::Gat;
    case VstKind::KSigma: return ProfileTransform::KSigma;
    case VstKind::Identity: return ProfileTransform::Identity;
    }
    throw std::invalid_argument("profile_transform: bad kind");
}

struct ProfilePoint {
    double mean = 0.0;
    double variance = 0.0;
};

// Monte-Carlo variance of the transformed signal: draws Poisson(m) plus
// Gaussian(g, acute_sigma_sq) in gain-normalized units, applies the chosen
// transform and reports the unbiased sample variance per mean.
inline std::vector<ProfilePoint> stabilization_profile(ProfileTransform kind,
                                                       const VstParams& vp,
                                                       std::span<const double> means,
                                                       long n_samples, uint64_t seed) {
    if (means.empty())
        throw std::invalid_argument("stabilization_profile: empty means list");
    if (n_samples < 10000)
        throw std::invalid_argument("stabilization_profile: need at least 1e4 samples");

    const double s2 = vp.acute_sigma_sq;
    const double g = vp.gauss_mean;
    const double sdev = std::sqrt(s2);

    std::vector<ProfilePoint> out;
    out.reserve(means.size());
    for (size_t mi = 0; mi < means.size(); ++mi) {
        const double m = means[mi];
        if (m < 0.0)
            throw std::invalid_argument("stabilization_profile: negative mean");
        const uint64_t mean_seed = stream_key(seed, 0x50524F46ULL + mi);
        double sum = 0.0, sum_sq = 0.0;
        for (long i = 0; i < n_samples; ++i) {
            PixelRng rng(stream_key(mean_seed, static_cast<uint64_t>(i)));
            double z = static_cast<double>(poisson_draw(m, rng));
            if (sdev > 0.0 || g != 0.0)
                z += g + sdev * rng.gaussian();
            double y;
            switch (kind) {
            case ProfileTransform::FreemanTukey: y = detail::ft_scalar(z, s2, g); break;
            case ProfileTransform::Gat: y = detail::gat_scalar(z, s2, g); break;
            case ProfileTransform::KSigma: y = z + s2; break;
            case ProfileTransform::Identity: y = z; break;
            case ProfileTransform::Bartlett: y = detail::bartlett_scalar(z); break;
            case ProfileTransform::Root: y = detail::root_scalar(z); break;
            default: throw std::invalid_argument("stabilization_profile: bad kind");
            }
            sum += y;
            sum_sq += y * y;
        }
        const double n = static_cast<double>(n_samples);
        const double mean_y = sum / n;
        const double var = (sum_sq - n * mean_y * mean_y) / (n - 1.0);
        out.push_back({m, var});
    }
    return out;
}

inline std::vector<ProfilePoint> stabilization_profile(VstKind kind, const VstParams& vp,
                                                       std::span<const double> means,
                                                       long n_samples, uint64_t seed) {
    return stabilization_profile(profile_transform(kind), vp, means, n_samples, seed);
}

} // namespace burstdn
