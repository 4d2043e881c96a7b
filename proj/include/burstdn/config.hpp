#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "burstdn/align.hpp"
#include "burstdn/denoisers.hpp"
#include "burstdn/error.hpp"
#include "burstdn/fuse.hpp"
#include "burstdn/vst.hpp"

namespace burstdn {

struct MetricConfig {
    double gamma = 1.0 / 2.2;
    double peak = 1.0;
    double w1 = 0.5;
};

// Everything a pipeline run needs; mirrors the JSON config file.
struct PipelineConfig {
    VstKind vst = VstKind::FreemanTukey;
    AlignConfig align;
    int group_size = 3;
    DenoiserConfig base_denoiser;            // fans out per scale when stages is empty
    std::vector<BundleConfig> stage_bundles; // explicit per-stage bundles (optional)
    MetricConfig metrics;
};

inline VstKind vst_kind_from_name(const std::string& name) {
    if (name == "freeman_tukey" || name == "ft") return VstKind::FreemanTukey;
    if (name == "gat" || name == "anscombe") return VstKind::GAT;
    if (name == "k_sigma" || name == "ksigma") return VstKind::KSigma;
    if (name == "identity" || name == "none") return VstKind::Identity;
    throw std::invalid_argument("unknown vst kind '" + name + "'");
}

inline const char* vst_kind_name(VstKind k) {
    switch (k) {
    case VstKind::FreemanTukey: return "freeman_tukey";
    case VstKind::GAT: return "gat";
    case VstKind::KSigma: return "k_sigma";
    case VstKind::Identity: return "identity";
    }
    return "?";
}

inline DenoiserKind denoiser_kind_from_name(const std::string& name) {
    if (name == "identity") return DenoiserKind::Identity;
    if (name == "gaussian") return DenoiserKind::Gaussian;
    if (name == "wiener_vst" || name == "wiener") return DenoiserKind::WienerVst;
    if (name == "guided_blend") return DenoiserKind::GuidedBlend;
    throw std::invalid_argument("unknown denoiser kind '" + name + "'");
}

namespace detail {

inline DenoiserConfig parse_denoiser(const nlohmann::json& j) {
    DenoiserConfig cfg;
    if (j.contains("kind"))
        cfg.kind = denoiser_kind_from_name(j.at("kind").get<std::string>());
    cfg.sigma_px = j.value("sigma_px", cfg.sigma_px);
    cfg.window_px = j.value("window_px", cfg.window_px);
    cfg.noise_var = j.value("noise_var", cfg.noise_var);
    cfg.band_weight = j.value("band_weight", cfg.band_weight);
    cfg.validate();
    return cfg;
}

// a denoiser entry is either a flat config or one with per-scale overrides
inline BundleConfig parse_bundle(const nlohmann::json& j) {
    DenoiserConfig base = parse_denoiser(j);
    BundleConfig bc = spread_bundle_config(base);
    if (j.contains("per_scale")) {
        const auto& arr = j.at("per_scale");
        if (!arr.is_array() || arr.size() != 3)
            throw std::invalid_argument("denoiser per_scale must be an array of 3 configs");
        for (int s = 0; s < 3; ++s)
            bc.scales[s] = parse_denoiser(arr[s]);
    }
    return bc;
}

} // namespace detail

inline PipelineConfig parse_pipeline_config(const nlohmann::json& j) {
    PipelineConfig cfg;
    if (j.contains("vst"))
        cfg.vst = vst_kind_from_name(j.at("vst").get<std::string>());

    if (j.contains("align")) {
        const auto& a = j.at("align");
        cfg.align.levels = a.value("levels", cfg.align.levels);
        cfg.align.tile_size = a.value("tile_size", cfg.align.tile_size);
        cfg.align.low_light_tile32 = a.value("low_light_tile32", cfg.align.low_light_tile32);
        cfg.align.search_radius = a.value("search_radius", cfg.align.search_radius);
        cfg.align.fast_threshold_frac =
            a.value("fast_threshold_frac", cfg.align.fast_threshold_frac);
        cfg.align.max_keypoints = a.value("max_keypoints", cfg.align.max_keypoints);
        cfg.align.match_ratio = a.value("match_ratio", cfg.align.match_ratio);
        cfg.align.max_disp_frac = a.value("max_disp_frac", cfg.align.max_disp_frac);
        if (a.contains("ransac")) {
            const auto& r = a.at("ransac");
            cfg.align.ransac.iters = r.value("iters", cfg.align.ransac.iters);
            cfg.align.ransac.inlier_px = r.value("inlier_px", cfg.align.ransac.inlier_px);
            cfg.align.ransac.min_inliers = r.value("min_inliers", cfg.align.ransac.min_inliers);
            cfg.align.ransac.seed = r.value("seed", cfg.align.ransac.seed);
        }
        cfg.align.validate();
    }

    if (j.contains("fuse")) {
        const auto& f = j.at("fuse");
        cfg.group_size = f.value("group_size", cfg.group_size);
        if (cfg.group_size < 1)
            throw std::invalid_argument("fuse.group_size must be >= 1");
        if (f.contains("stages")) {
            for (const auto& s : f.at("stages"))
                cfg.stage_bundles.push_back(detail::parse_bundle(s));
        }
    }

    if (j.contains("denoiser")) {
        cfg.base_denoiser = detail::parse_denoiser(j.at("denoiser"));
        if (j.at("denoiser").contains("per_scale")) {
            // a single bundle with explicit scales applies to every stage
            cfg.stage_bundles.assign(1, detail::parse_bundle(j.at("denoiser")));
        }
    }

    if (j.contains("metrics")) {
        const auto& m = j.at("metrics");
        cfg.metrics.gamma = m.value("gamma", cfg.metrics.gamma);
        cfg.metrics.peak = m.value("peak", cfg.metrics.peak);
        cfg.metrics.w1 = m.value("w1", cfg.metrics.w1);
    }
    return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw FormatError(path + ": cannot open config file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    return parse_pipeline_config(j);
}

// Each stage owns its own bundle instance. A single explicit bundle config
// replicates across stages; a list must match the stage count exactly.
inline FusePlan build_plan(const PipelineConfig& cfg, int n_frames) {
    FusePlan plan;
    plan.group_size = cfg.group_size;
    const int stages = fuse_stage_count(n_frames, cfg.group_size);
    if (cfg.stage_bundles.empty()) {
        for (int i = 0; i < stages; ++i)
            plan.stages.push_back(make_bundle(cfg.base_denoiser));
    } else if (cfg.stage_bundles.size() == 1) {
        for (int i = 0; i < stages; ++i)
            plan.stages.push_back(make_bundle(cfg.stage_bundles[0]));
    } else {
        if (static_cast<int>(cfg.stage_bundles.size()) != stages)
            throw std::invalid_argument("config lists " +
                                        std::to_string(cfg.stage_bundles.size()) +
                                        " stages but the burst needs " + std::to_string(stages));
        for (const auto& bc : cfg.stage_bundles)
            plan.stages.push_back(make_bundle(bc));
    }
    return plan;
}

} // namespace burstdn
