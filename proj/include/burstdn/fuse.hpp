#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "burstdn/burst.hpp"
#include "burstdn/error.hpp"
#include "burstdn/image.hpp"

namespace burstdn {

// Fixed scale-change operators of the multi-frequency stack. Downsampling is
// the factor-2 bilinear kernel (2x2 average); odd dimensions replicate-pad
// before the average, so sizes follow ceil(n/2). Upsampling is half-pixel
// aligned bilinear, cropped back to the requested size.

inline ImagePlane freq_downsample(const ImagePlane& img) {
    const int ow = (img.width + 1) / 2;
    const int oh = (img.height + 1) / 2;
    ImagePlane out(ow, oh, img.domain);
    for (int y = 0; y < oh; ++y) {
        const float* r0 = img.row(std::min(2 * y, img.height - 1));
        const float* r1 = img.row(std::min(2 * y + 1, img.height - 1));
        float* dst = out.row(y);
        for (int x = 0; x < ow; ++x) {
            const int x0 = std::min(2 * x, img.width - 1);
            const int x1 = std::min(2 * x + 1, img.width - 1);
            dst[x] = 0.25f * (r0[x0] + r0[x1] + r1[x0] + r1[x1]);
        }
    }
    return out;
}

inline ImagePlane freq_upsample(const ImagePlane& img, int target_w, int target_h) {
    if (target_w > 2 * img.width || target_h > 2 * img.height)
        throw std::invalid_argument("freq_upsample: target more than 2x the source");
    ImagePlane out(target_w, target_h, img.domain);
    for (int y = 0; y < target_h; ++y) {
        const double sy = (y + 0.5) * 0.5 - 0.5;
        float* dst = out.row(y);
        for (int x = 0; x < target_w; ++x) {
            const double sx = (x + 0.5) * 0.5 - 0.5;
            dst[x] = bilinear_at(img, sx, sy);
        }
    }
    return out;
}

inline ImagePlane plane_add(const ImagePlane& a, const ImagePlane& b) {
    require_same_dims(a, b, "plane_add");
    ImagePlane out = a;
    for (size_t i = 0; i < out.size(); ++i)
        out.samples[i] += b.samples[i];
    return out;
}

inline ImagePlane plane_sub(const ImagePlane& a, const ImagePlane& b) {
    require_same_dims(a, b, "plane_sub");
    ImagePlane out = a;
    for (size_t i = 0; i < out.size(); ++i)
        out.samples[i] -= b.samples[i];
    return out;
}

// Residual predictor at one scale: takes every stage input at that scale
// plus the upsampled result of the next-coarser scale (null at the coarsest).
using ScaleDenoiser =
    std::function<ImagePlane(const std::vector<ImagePlane>& inputs, const ImagePlane* lower)>;

// One multi-frequency stage: a denoiser per scale, 0 = finest.
struct DenoiserBundle {
    std::array<ScaleDenoiser, 3> scales;
};

struct ScaleInputs {
    std::vector<ImagePlane> m0, m1, m2; // per input frame
};

struct FreqStack {
    std::array<ImagePlane, 3> m; // first input at each scale
    std::array<ImagePlane, 3> o; // denoised output per scale
};

inline ScaleInputs freq_decompose(const std::vector<ImagePlane>& inputs) {
    if (inputs.empty())
        throw std::invalid_argument("freq_decompose: no inputs");
    if (inputs[0].width < 4 || inputs[0].height < 4)
        throw std::invalid_argument("freq_decompose: dimensions must be >= 4");
    ScaleInputs s;
    for (const auto& in : inputs) {
        require_same_dims(in, inputs[0], "freq_decompose");
        s.m0.push_back(in);
        s.m1.push_back(freq_downsample(in));
        s.m2.push_back(freq_downsample(s.m1.back()));
    }
    return s;
}

namespace detail {

inline ImagePlane checked_residual(const ScaleDenoiser& d, const std::vector<ImagePlane>& inputs,
                                   const ImagePlane* lower, const char* where) {
    ImagePlane r = d(inputs, lower);
    if (!r.same_dims(inputs[0]))
        throw ContractViolation(std::string(where) + ": residual dims " +
                                std::to_string(r.width) + "x" + std::to_string(r.height) +
                                " do not match input " + std::to_string(inputs[0].width) + "x" +
                                std::to_string(inputs[0].height));
    return r;
}

} // namespace detail

// Coarse-to-fine residual denoising: each scale adds its predicted residual
// to the first input, and the result is upsampled into the next-finer scale.
inline FreqStack freq_denoise(const ScaleInputs& s, const DenoiserBundle& bundle) {
    for (const auto& d : bundle.scales)
        if (!d)
            throw std::invalid_argument("freq_denoise: missing scale denoiser");

    FreqStack stack;
    stack.m = {s.m0[0], s.m1[0], s.m2[0]};

    stack.o[2] = plane_add(s.m2[0],
                           detail::checked_residual(bundle.scales[2], s.m2, nullptr, "scale 2"));
    const ImagePlane lower1 = freq_upsample(stack.o[2], s.m1[0].width, s.m1[0].height);
    stack.o[1] = plane_add(s.m1[0],
                           detail::checked_residual(bundle.scales[1], s.m1, &lower1, "scale 1"));
    const ImagePlane lower0 = freq_upsample(stack.o[1], s.m0[0].width, s.m0[0].height);
    stack.o[0] = plane_add(s.m0[0],
                           detail::checked_residual(bundle.scales[0], s.m0, &lower0, "scale 0"));
    return stack;
}

// Cross-scale residual aggregation: n1 and n2 are the low-frequency noise
// exposed by downsampling the finer outputs; both are removed at full
// resolution after upsampling.
inline ImagePlane freq_aggregate(const ImagePlane& o0, const ImagePlane& o1,
                                 const ImagePlane& o2) {
    const auto down_w = [](int n) { return (n + 1) / 2; };
    if (o1.width != down_w(o0.width) || o1.height != down_w(o0.height) ||
        o2.width != down_w(o1.width) || o2.height != down_w(o1.height))
        throw std::invalid_argument("freq_aggregate: scale dimensions do not chain");

    const ImagePlane n1 = plane_sub(freq_downsample(o0), o1);
    const ImagePlane n2 = plane_sub(freq_downsample(o1), o2);
    ImagePlane result = plane_sub(o0, freq_upsample(n1, o0.width, o0.height));
    const ImagePlane n2_up = freq_upsample(n2, o1.width, o1.height);
    return plane_sub(result, freq_upsample(n2_up, o0.width, o0.height));
}

// One full multi-frequency pass over a set of frames.
inline ImagePlane denoise_stage(const std::vector<ImagePlane>& inputs,
                                const DenoiserBundle& bundle) {
    const ScaleInputs s = freq_decompose(inputs);
    const FreqStack stack = freq_denoise(s, bundle);
    return freq_aggregate(stack.o[0], stack.o[1], stack.o[2]);
}

// Sequential plan: stage 0 denoises the reference alone, later stages refine
// the intermediate result with one group of alternates each.
struct FusePlan {
    int group_size = 3;
    std::vector<DenoiserBundle> stages;
};

inline int fuse_stage_count(int n_frames, int group_size) {
    if (n_frames < 1)
        throw std::invalid_argument("fuse_stage_count: need at least one frame");
    if (group_size < 1)
        throw std::invalid_argument("fuse_stage_count: group_size must be >= 1");
    const int alternates = n_frames - 1;
    return 1 + (alternates + group_size - 1) / group_size;
}

inline std::vector<int> fuse_group_sizes(int n_frames, int group_size) {
    std::vector<int> sizes;
    int left = n_frames - 1;
    while (left > 0) {
        const int take = std::min(group_size, left);
        sizes.push_back(take);
        left -= take;
    }
    return sizes;
}

// Runs the full sequential refinement. Frames must be pre-aligned and in the
// stabilized domain; alternates are consumed in temporal order.
inline ImagePlane denoise_burst(const Burst& burst, const FusePlan& plan) {
    burst.validate();
    if (burst.reference.domain != Domain::Vst)
        throw std::invalid_argument("denoise_burst: frames must be in the vst domain");
    const int n = burst.frame_count();
    const int want_stages = fuse_stage_count(n, plan.group_size);
    if (static_cast<int>(plan.stages.size()) != want_stages)
        throw std::invalid_argument("denoise_burst: plan has " +
                                    std::to_string(plan.stages.size()) + " stages, burst needs " +
                                    std::to_string(want_stages));

    ImagePlane result = denoise_stage({burst.reference}, plan.stages[0]);
    size_t consumed = 0;
    for (int stage = 1; stage < want_stages; ++stage) {
        std::vector<ImagePlane> inputs{result};
        for (int g = 0; g < plan.group_size && consumed < burst.alternates.size(); ++g)
            inputs.push_back(burst.alternates[consumed++]);
        result = denoise_stage(inputs, plan.stages[stage]);
    }
    return result;
}

} // namespace burstdn
