#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "burstdn/align.hpp"
#include "burstdn/config.hpp"
#include "burstdn/fuse.hpp"
#include "burstdn/metrics.hpp"
#include "burstdn/vst.hpp"

namespace burstdn {

struct StageTiming {
    std::string name;
    double ms = 0.0;
};

struct PipelineDiagnostics {
    std::vector<StageTiming> timings;
    AlignDiagnostics align;
    bool align_ran = false;
};

struct PipelineResult {
    ImagePlane denoised; // raw-linear
    std::optional<MetricReport> report;
    PipelineDiagnostics diag;
};

namespace detail {

class StageClock {
public:
    explicit StageClock(std::vector<StageTiming>& out) : out_(out) {}

    template <typename F>
    auto run(const char* name, F&& f) -> decltype(f()) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            auto result = f();
            record(name, t0);
            return result;
        } catch (const std::exception& e) {
            record(name, t0);
            throw std::runtime_error(std::string("pipeline stage '") + name + "': " + e.what());
        }
    }

private:
    void record(const char* name, std::chrono::steady_clock::time_point t0) {
        const auto t1 = std::chrono::steady_clock::now();
        out_.push_back({name, std::chrono::duration<double, std::milli>(t1 - t0).count()});
    }

    std::vector<StageTiming>& out_;
};

inline ImagePlane denoise_frames(const Burst& aligned, const PipelineConfig& cfg) {
    if (aligned.layout == BayerLayout::Gray)
        return denoise_burst(aligned, build_plan(cfg, aligned.frame_count()));

    // RGGB: the four phase planes share the alignment and fuse independently
    auto ref_planes = bayer_split(aligned.reference);
    std::vector<std::array<ImagePlane, 4>> alt_planes;
    for (const auto& alt : aligned.alternates)
        alt_planes.push_back(bayer_split(alt));

    std::array<ImagePlane, 4> out_planes{
        ImagePlane(1, 1), ImagePlane(1, 1), ImagePlane(1, 1), ImagePlane(1, 1)};
    for (int p = 0; p < 4; ++p) {
        Burst plane_burst;
        plane_burst.reference = ref_planes[p];
        plane_burst.params = aligned.params;
        plane_burst.layout = BayerLayout::Gray;
        for (const auto& planes : alt_planes)
            plane_burst.alternates.push_back(planes[p]);
        out_planes[p] = denoise_burst(plane_burst, build_plan(cfg, plane_burst.frame_count()));
    }
    return bayer_join(out_planes);
}

} // namespace detail

// Full run: stabilize, align, sequentially fuse, invert. The output is in
// the raw-linear domain; a metric report is attached when the clean ground
// truth is supplied.
inline PipelineResult run_pipeline(const Burst& burst, const PipelineConfig& cfg,
                                   const ImagePlane* ground_truth = nullptr) {
    burst.validate();
    require_domain(burst.reference, Domain::RawLinear, "run_pipeline");

    PipelineResult result;
    detail::StageClock clock(result.diag.timings);

    Burst stabilized = clock.run("vst_forward", [&] {
        Burst out;
        out.params = burst.params;
        out.layout = burst.layout;
        out.reference = vst_forward(cfg.vst, burst.reference, burst.params);
        for (const auto& alt : burst.alternates)
            out.alternates.push_back(vst_forward(cfg.vst, alt, burst.params));
        return out;
    });

    Burst aligned = stabilized;
    if (!burst.alternates.empty()) {
        AlignResult ar = clock.run("align", [&] { return align_burst(stabilized, cfg.align); });
        aligned = std::move(ar.aligned);
        result.diag.align = std::move(ar.diag);
        result.diag.align_ran = true;
    }

    ImagePlane denoised_vst =
        clock.run("denoise", [&] { return detail::denoise_frames(aligned, cfg); });

    result.denoised = clock.run("vst_inverse",
                                [&] { return vst_inverse(cfg.vst, denoised_vst, burst.params); });

    if (ground_truth)
        result.report = metric_report(result.denoised, *ground_truth, cfg.metrics.peak,
                                      cfg.metrics.gamma, cfg.metrics.w1);
    return result;
}

} // namespace burstdn
