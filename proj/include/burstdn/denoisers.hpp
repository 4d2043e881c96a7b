#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "burstdn/fuse.hpp"
#include "burstdn/image.hpp"

namespace burstdn {

enum class DenoiserKind { Identity, Gaussian, WienerVst, GuidedBlend };

struct DenoiserConfig {
    DenoiserKind kind = DenoiserKind::WienerVst;
    double sigma_px = 1.0;    // Gaussian blur width
    int window_px = 7;        // WienerVst window, odd >= 3
    double noise_var = 1.0;   // WienerVst assumed noise variance
    double band_weight = 0.0; // blend of the lower-scale result into the mean

    void validate() const {
        if (kind == DenoiserKind::Gaussian && !(sigma_px > 0.0))
            throw std::invalid_argument("DenoiserConfig: sigma_px must be positive");
        if (kind == DenoiserKind::WienerVst) {
            if (window_px < 3 || window_px % 2 == 0)
                throw std::invalid_argument("DenoiserConfig: window_px must be odd and >= 3");
            if (!(noise_var > 0.0))
                throw std::invalid_argument("DenoiserConfig: noise_var must be positive");
        }
        if (band_weight < 0.0 || band_weight > 1.0)
            throw std::invalid_argument("DenoiserConfig: band_weight must be in [0,1]");
    }
};

namespace detail {

inline ImagePlane frame_average(const std::vector<ImagePlane>& inputs) {
    ImagePlane avg = inputs[0];
    for (size_t k = 1; k < inputs.size(); ++k) {
        require_same_dims(inputs[k], avg, "frame_average");
        for (size_t i = 0; i < avg.size(); ++i)
            avg.samples[i] += inputs[k].samples[i];
    }
    const float inv = 1.0f / static_cast<float>(inputs.size());
    for (auto& v : avg.samples)
        v *= inv;
    return avg;
}

// Separable Gaussian, kernel truncated at 3 sigma and renormalized; border
// taps renormalize over the in-bounds support so constants pass through.
inline ImagePlane gaussian_blur(const ImagePlane& img, double sigma) {
    sigma = std::max(sigma, 0.3);
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> w(radius + 1);
    for (int i = 0; i <= radius; ++i)
        w[i] = std::exp(-0.5 * i * i / (sigma * sigma));

    ImagePlane tmp(img.width, img.height, img.domain);
    for (int y = 0; y < img.height; ++y) {
        const float* src = img.row(y);
        float* dst = tmp.row(y);
        for (int x = 0; x < img.width; ++x) {
            double sum = 0.0, norm = 0.0;
            const int lo = std::max(-radius, -x);
            const int hi = std::min(radius, img.width - 1 - x);
            for (int i = lo; i <= hi; ++i) {
                sum += w[std::abs(i)] * src[x + i];
                norm += w[std::abs(i)];
            }
            dst[x] = static_cast<float>(sum / norm);
        }
    }
    ImagePlane out(img.width, img.height, img.domain);
    for (int x = 0; x < img.width; ++x) {
        for (int y = 0; y < img.height; ++y) {
            double sum = 0.0, norm = 0.0;
            const int lo = std::max(-radius, -y);
            const int hi = std::min(radius, img.height - 1 - y);
            for (int i = lo; i <= hi; ++i) {
                sum += w[std::abs(i)] * tmp.at(x, y + i);
                norm += w[std::abs(i)];
            }
            out.at(x, y) = static_cast<float>(sum / norm);
        }
    }
    return out;
}

} // namespace detail

// Zero residual: the stage passes its first input straight through.
inline ImagePlane identity_denoiser(const std::vector<ImagePlane>& inputs,
                                    const ImagePlane* /*lower*/) {
    if (inputs.empty())
        throw std::invalid_argument("identity_denoiser: no inputs");
    return ImagePlane(inputs[0].width, inputs[0].height, inputs[0].domain, 0.0f);
}

namespace detail {

// Agreement-weighted temporal merge. Each alternate is shrunk toward the
// first input in proportion to the local mean-square difference against the
// expected value 2*noise_var: aligned regions mix like an average, regions
// that disagree (residual misalignment, occlusion) fall back to the first
// input. In the stabilized domain noise_var is a known constant, so the
// rejection threshold needs no estimation.
struct TemporalMerge {
    ImagePlane merged;
    // per-pixel variance of the merge relative to one input frame:
    // (1 + sum w^2) / (1 + sum w)^2, so 1/M under full agreement
    std::vector<float> var_scale;
};

inline TemporalMerge robust_temporal_merge(const std::vector<ImagePlane>& inputs,
                                           double noise_var) {
    const ImagePlane& ref = inputs[0];
    TemporalMerge out{ref, std::vector<float>(ref.size(), 1.0f)};
    if (inputs.size() == 1)
        return out;
    constexpr int r = 2; // 5x5 window for the local difference statistics
    const double diff_var = 2.0 * noise_var;

    std::vector<double> acc(ref.size(), 0.0);   // weighted sum of (alt - ref)
    std::vector<double> wsum(ref.size(), 0.0);  // sum of weights
    std::vector<double> wsum2(ref.size(), 0.0); // sum of squared weights
    ImagePlane diff_sq(ref.width, ref.height, ref.domain);
    for (size_t k = 1; k < inputs.size(); ++k) {
        require_same_dims(inputs[k], ref, "robust_temporal_merge");
        for (size_t i = 0; i < ref.size(); ++i) {
            const double d = static_cast<double>(inputs[k].samples[i]) - ref.samples[i];
            diff_sq.samples[i] = static_cast<float>(d * d);
        }
        const IntegralImage sums(diff_sq);
        for (int y = 0; y < ref.height; ++y)
            for (int x = 0; x < ref.width; ++x) {
                const size_t i = static_cast<size_t>(y) * ref.width + x;
                const int count =
                    IntegralImage::box_count(x - r, y - r, x + r, y + r, ref.width, ref.height);
                const double s = sums.box_sum(x - r, y - r, x + r, y + r) / count;
                const double keep = diff_var / (s + diff_var); // 1/2 for pure noise
                const double d = static_cast<double>(inputs[k].samples[i]) - ref.samples[i];
                acc[i] += keep * d;
                wsum[i] += keep;
                wsum2[i] += keep * keep;
            }
    }
    for (size_t i = 0; i < ref.size(); ++i) {
        const double denom = 1.0 + wsum[i];
        out.merged.samples[i] = static_cast<float>(ref.samples[i] + acc[i] / denom);
        out.var_scale[i] = static_cast<float>((1.0 + wsum2[i]) / (denom * denom));
    }
    return out;
}

} // namespace detail

// Local-statistics Wiener shrinkage on the robust temporal merge. In the
// stabilized domain the noise variance is a known constant, so the shrink
// factor max(v - noise_var, 0) / v needs no per-pixel noise estimate.
inline ImagePlane wiener_vst_denoiser(const std::vector<ImagePlane>& inputs,
                                      const ImagePlane* lower, const DenoiserConfig& cfg) {
    if (inputs.empty())
        throw std::invalid_argument("wiener_vst_denoiser: no inputs");
    if (inputs[0].domain != Domain::Vst)
        throw std::invalid_argument("wiener_vst_denoiser: inputs must be in the vst domain");
    cfg.validate();
    if (lower)
        require_same_dims(*lower, inputs[0], "wiener_vst_denoiser");

    const detail::TemporalMerge merge = detail::robust_temporal_merge(inputs, cfg.noise_var);
    const ImagePlane& avg = merge.merged;
    const IntegralImage sum(avg);
    const IntegralImage sum_sq(avg, true);
    const int r = cfg.window_px / 2;
    constexpr double eps = 1e-6;

    ImagePlane residual(avg.width, avg.height, inputs[0].domain);
    for (int y = 0; y < avg.height; ++y) {
        for (int x = 0; x < avg.width; ++x) {
            const size_t i = static_cast<size_t>(y) * avg.width + x;
            const int count =
                IntegralImage::box_count(x - r, y - r, x + r, y + r, avg.width, avg.height);
            const double mean = sum.box_sum(x - r, y - r, x + r, y + r) / count;
            const double mean_sq = sum_sq.box_sum(x - r, y - r, x + r, y + r) / count;
            const double var = std::max(mean_sq - mean * mean, 0.0);

            double mu = mean;
            if (lower)
                mu = (1.0 - cfg.band_weight) * mean + cfg.band_weight * lower->at(x, y);
            // the merge tracks how far its weights cut the per-frame noise
            const double nv = cfg.noise_var * merge.var_scale[i];
            const double gain = std::max(var - nv, 0.0) / std::max(var, eps);
            const double denoised = mu + gain * (avg.at(x, y) - mu);
            residual.at(x, y) = static_cast<float>(denoised - inputs[0].at(x, y));
        }
    }
    return residual;
}

// Gaussian blur of the temporal average.
inline ImagePlane gaussian_denoiser(const std::vector<ImagePlane>& inputs,
                                    const ImagePlane* /*lower*/, const DenoiserConfig& cfg) {
    if (inputs.empty())
        throw std::invalid_argument("gaussian_denoiser: no inputs");
    cfg.validate();
    const ImagePlane blurred = detail::gaussian_blur(detail::frame_average(inputs), cfg.sigma_px);
    return plane_sub(blurred, inputs[0]);
}

// Blends the lower-scale result into the temporal average; a pure band-merge
// stand-in with no spatial filtering of its own.
inline ImagePlane guided_blend_denoiser(const std::vector<ImagePlane>& inputs,
                                        const ImagePlane* lower, const DenoiserConfig& cfg) {
    if (inputs.empty())
        throw std::invalid_argument("guided_blend_denoiser: no inputs");
    cfg.validate();
    ImagePlane denoised = detail::frame_average(inputs);
    if (lower) {
        require_same_dims(*lower, denoised, "guided_blend_denoiser");
        const float b = static_cast<float>(cfg.band_weight);
        for (size_t i = 0; i < denoised.size(); ++i)
            denoised.samples[i] = (1.0f - b) * denoised.samples[i] + b * lower->samples[i];
    }
    return plane_sub(denoised, inputs[0]);
}

inline ScaleDenoiser make_scale_denoiser(const DenoiserConfig& cfg) {
    cfg.validate();
    switch (cfg.kind) {
    case DenoiserKind::Identity:
        return identity_denoiser;
    case DenoiserKind::Gaussian:
        return [cfg](const std::vector<ImagePlane>& in, const ImagePlane* lower) {
            return gaussian_denoiser(in, lower, cfg);
        };
    case DenoiserKind::WienerVst:
        return [cfg](const std::vector<ImagePlane>& in, const ImagePlane* lower) {
            return wiener_vst_denoiser(in, lower, cfg);
        };
    case DenoiserKind::GuidedBlend:
        return [cfg](const std::vector<ImagePlane>& in, const ImagePlane* lower) {
            return guided_blend_denoiser(in, lower, cfg);
        };
    }
    throw std::invalid_argument("make_scale_denoiser: bad kind");
}

// Per-scale configs, index 0 = finest.
struct BundleConfig {
    std::array<DenoiserConfig, 3> scales;
};

// Downsampling by a 2x2 average quarters the noise variance, so a single
// WienerVst config fans out with noise_var / 4^scale.
inline BundleConfig spread_bundle_config(const DenoiserConfig& base) {
    BundleConfig bc{{base, base, base}};
    if (base.kind == DenoiserKind::WienerVst)
        for (int s = 0; s < 3; ++s)
            bc.scales[s].noise_var = base.noise_var / std::pow(4.0, s);
    return bc;
}

inline DenoiserBundle make_bundle(const BundleConfig& bc) {
    DenoiserBundle b;
    for (int s = 0; s < 3; ++s)
        b.scales[s] = make_scale_denoiser(bc.scales[s]);
    return b;
}

inline DenoiserBundle make_bundle(const DenoiserConfig& base) {
    return make_bundle(spread_bundle_config(base));
}

inline FusePlan make_plan(int n_frames, int group_size, const DenoiserConfig& base) {
    FusePlan plan;
    plan.group_size = group_size;
    const int stages = fuse_stage_count(n_frames, group_size);
    for (int i = 0; i < stages; ++i)
        plan.stages.push_back(make_bundle(base));
    return plan;
}

} // namespace burstdn
