#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "burstdn/block_match.hpp"
#include "burstdn/burst.hpp"
#include "burstdn/features.hpp"
#include "burstdn/homography.hpp"
#include "burstdn/image.hpp"
#include "burstdn/pyramid.hpp"

namespace burstdn {

struct AlignConfig {
    int levels = 4;
    int tile_size = 16;           // 16 or 32
    bool low_light_tile32 = true; // switch to 32 when acute sigma^2 > 1
    int search_radius = 2;
    double fast_threshold_frac = 0.10; // of the reference level's dynamic range
    int max_keypoints = 512;
    double match_ratio = 0.8;
    // estimated homographies implying corner motion beyond this fraction of
    // the level's smaller dimension are treated as failures
    double max_disp_frac = 0.25;
    RansacParams ransac;

    void validate() const {
        if (levels < 2)
            throw std::invalid_argument("AlignConfig: levels must be >= 2");
        if (tile_size != 16 && tile_size != 32)
            throw std::invalid_argument("AlignConfig: tile_size must be 16 or 32");
        if (search_radius < 1)
            throw std::invalid_argument("AlignConfig: search_radius must be >= 1");
    }
};

inline int effective_tile_size(const AlignConfig& cfg, NoiseParams params) {
    if (cfg.tile_size == 16 && cfg.low_light_tile32 && params.sigma_s > 0.0) {
        const double acute_sq =
            (params.sigma_r / params.sigma_s) * (params.sigma_r / params.sigma_s);
        if (acute_sq > 1.0)
            return 32;
    }
    return cfg.tile_size;
}

struct AlternateDiagnostics {
    Homography global;
    bool global_fallback = false;
    bool has_blocks = false;
    std::array<Homography, 4> blocks{}; // TL, TR, BL, BR at level (levels-2)
    std::array<bool, 4> block_fallback{};
    std::vector<TileFlow> flows;      // coarsest tile level first, level 0 last
    std::vector<TileFlow> init_flows; // search-window centres per tile level
};

struct AlignDiagnostics {
    int levels = 4;
    int tile_size = 16; // effective size on the matching plane
    std::vector<AlternateDiagnostics> alternates;
};

namespace detail {

inline bool plausible_motion(const Homography& h, int w, int h_px, double max_disp_frac) {
    const double cap = max_disp_frac * std::min(w, h_px);
    for (double py : {0.0, static_cast<double>(h_px - 1)})
        for (double px : {0.0, static_cast<double>(w - 1)}) {
            const auto [u, v] = h.apply(px, py);
            if (!std::isfinite(u) || !std::isfinite(v) ||
                std::hypot(u - px, v - py) > cap)
                return false;
        }
    return true;
}

// Mean L1 cost of a region under the rounded displacement the homography
// implies at the region's centre. Repetitive content can hand RANSAC a
// self-consistent wrong translation; the photometric cost exposes it.
inline double region_cost_under(const ImagePlane& ref, const ImagePlane& alt,
                                const Homography& h, int x0, int y0, int x1, int y1) {
    const double cx = 0.5 * (x0 + x1 - 1);
    const double cy = 0.5 * (y0 + y1 - 1);
    const auto [u, v] = h.apply(cx, cy);
    const int dx = static_cast<int>(std::lround(u - cx));
    const int dy = static_cast<int>(std::lround(v - cy));
    int count = 0;
    return tile_l1_cost(ref, alt, x0, y0, x1, y1, dx, dy, count);
}

inline std::optional<Homography> estimate_level_homography(const ImagePlane& ref,
                                                           const ImagePlane& alt,
                                                           const AlignConfig& cfg,
                                                           uint64_t ransac_seed) {
    const auto [lo, hi] = plane_min_max(ref);
    const float thr = static_cast<float>(cfg.fast_threshold_frac * (hi - lo));
    auto ref_kps = detect_fast(ref, thr, cfg.max_keypoints);
    auto alt_kps = detect_fast(alt, thr, cfg.max_keypoints);
    auto ref_d = brief_describe(ref, ref_kps);
    auto alt_d = brief_describe(alt, alt_kps);
    auto pairs = match_descriptors(ref_d.descriptors, alt_d.descriptors, cfg.match_ratio);

    std::vector<PointPair> matches;
    matches.reserve(pairs.size());
    for (auto [i, j] : pairs)
        matches.push_back({static_cast<double>(ref_d.keypoints[i].x),
                           static_cast<double>(ref_d.keypoints[i].y),
                           static_cast<double>(alt_d.keypoints[j].x),
                           static_cast<double>(alt_d.keypoints[j].y)});
    if (matches.size() < 4)
        return std::nullopt;
    RansacParams rp = cfg.ransac;
    rp.seed = ransac_seed;
    try {
        auto h = estimate_homography(matches, rp);
        if (h && !plausible_motion(*h, ref.width, ref.height, cfg.max_disp_frac))
            return std::nullopt;
        if (h) {
            // keep the estimate only if it does not worsen photometric
            // agreement relative to no motion at all
            const double cost_h = region_cost_under(ref, alt, *h, 0, 0, ref.width, ref.height);
            const double cost_id = region_cost_under(ref, alt, Homography::identity(), 0, 0,
                                                     ref.width, ref.height);
            if (cost_h > cost_id)
                return std::nullopt;
        }
        return h;
    } catch (const InsufficientFeatures&) {
        return std::nullopt;
    }
}

} // namespace detail

// Splits the plane into disjoint quadrants and estimates one homography per
// quadrant from features detected inside it. A quadrant without enough
// inlier support takes the parent homography rescaled to this level.
inline std::array<Homography, 4> block_homography_flow(const ImagePlane& ref_level,
                                                       const ImagePlane& alt_level,
                                                       const Homography& parent,
                                                       const AlignConfig& cfg = {},
                                                       std::array<bool, 4>* fallback = nullptr,
                                                       uint64_t ransac_seed = 0x5EEDBEEF) {
    if (!parent.invertible())
        throw std::invalid_argument("block_homography_flow: parent not invertible");
    require_same_dims(ref_level, alt_level, "block_homography_flow");

    const Homography parent_here = parent.rescaled(2.0);
    const auto [lo, hi] = plane_min_max(ref_level);
    const float thr = static_cast<float>(cfg.fast_threshold_frac * (hi - lo));

    auto ref_d = brief_describe(ref_level, detect_fast(ref_level, thr, cfg.max_keypoints * 4));
    auto alt_d = brief_describe(alt_level, detect_fast(alt_level, thr, cfg.max_keypoints * 4));

    const int half_w = ref_level.width / 2;
    const int half_h = ref_level.height / 2;
    auto block_of = [&](const Keypoint& kp) {
        return (kp.x >= half_w ? 1 : 0) + (kp.y >= half_h ? 2 : 0);
    };

    std::array<Homography, 4> out;
    for (int b = 0; b < 4; ++b) {
        std::vector<Descriptor> ra, rb;
        std::vector<Keypoint> ka, kb;
        for (size_t i = 0; i < ref_d.keypoints.size(); ++i)
            if (block_of(ref_d.keypoints[i]) == b) {
                ka.push_back(ref_d.keypoints[i]);
                ra.push_back(ref_d.descriptors[i]);
            }
        for (size_t i = 0; i < alt_d.keypoints.size(); ++i)
            if (block_of(alt_d.keypoints[i]) == b) {
                kb.push_back(alt_d.keypoints[i]);
                rb.push_back(alt_d.descriptors[i]);
            }

        std::optional<Homography> h;
        auto pairs = match_descriptors(ra, rb, cfg.match_ratio);
        if (static_cast<int>(pairs.size()) >= 4) {
            std::vector<PointPair> matches;
            for (auto [i, j] : pairs)
                matches.push_back({static_cast<double>(ka[i].x), static_cast<double>(ka[i].y),
                                   static_cast<double>(kb[j].x), static_cast<double>(kb[j].y)});
            RansacParams rp = cfg.ransac;
            rp.seed = stream_key(ransac_seed, 0xB10C + b);
            try {
                h = estimate_homography(matches, rp);
                if (h && !detail::plausible_motion(*h, ref_level.width, ref_level.height,
                                                   cfg.max_disp_frac))
                    h.reset();
            } catch (const InsufficientFeatures&) {
            }
        }
        if (h) {
            // block estimate must photometrically beat the inherited motion
            const int bx0 = (b % 2) * half_w, by0 = (b / 2) * half_h;
            const int bx1 = b % 2 ? ref_level.width : half_w;
            const int by1 = b / 2 ? ref_level.height : half_h;
            const double cost_h = detail::region_cost_under(ref_level, alt_level, *h, bx0, by0,
                                                            bx1, by1);
            const double cost_p = detail::region_cost_under(ref_level, alt_level, parent_here,
                                                            bx0, by0, bx1, by1);
            if (cost_h > cost_p)
                h.reset();
        }
        out[b] = h.value_or(parent_here);
        if (fallback)
            (*fallback)[b] = !h.has_value();
    }
    return out;
}

namespace detail {

// Seeds the first tile-matching level from the homographies one level up:
// each tile takes the rounded, doubled displacement at its centre.
inline TileFlow init_flow_from_homographies(int w, int h, int tile, int coarse_w, int coarse_h,
                                            const std::array<Homography, 4>& hs,
                                            bool quadrants) {
    TileFlow flow = TileFlow::zeros(w, h, tile);
    for (int ty = 0; ty < flow.grid_h; ++ty) {
        for (int tx = 0; tx < flow.grid_w; ++tx) {
            const double cx = std::min((tx + 0.5) * tile, w - 1.0);
            const double cy = std::min((ty + 0.5) * tile, h - 1.0);
            const double px = cx * 0.5;
            const double py = cy * 0.5;
            int b = 0;
            if (quadrants)
                b = (px >= coarse_w / 2 ? 1 : 0) + (py >= coarse_h / 2 ? 2 : 0);
            const auto [u, v] = hs[b].apply(px, py);
            flow.at(tx, ty) = {static_cast<int>(std::lround(2.0 * (u - px))),
                               static_cast<int>(std::lround(2.0 * (v - py)))};
        }
    }
    return flow;
}

} // namespace detail

struct AlignResult {
    Burst aligned;
    AlignDiagnostics diag;
};

namespace detail {

// For RGGB bursts the matching flow lives on the half-resolution green
// plane; doubling tile size and vectors applies it to the mosaic with even
// displacements, which keeps every sample on its own Bayer phase.
inline TileFlow mosaic_flow(const TileFlow& half) {
    TileFlow f = half;
    f.tile_size = half.tile_size * 2;
    for (auto& o : f.offsets) {
        o[0] *= 2;
        o[1] *= 2;
    }
    return f;
}

inline ImagePlane warp_alternate(const ImagePlane& alt, const TileFlow& flow, bool bayer) {
    if (bayer)
        return warp_tiles(alt, mosaic_flow(flow));
    return warp_tiles(alt, flow);
}

} // namespace detail

// Coarse-to-fine alignment of every alternate onto the reference: global
// homography at the top level, quadrant homography flow one level down,
// then integer tile matching at the remaining levels. The final warp is
// always the level-0 tile flow (it inherits the homography through its
// initialization), so recovery from a failed homography costs nothing
// beyond the reduced search window.
inline AlignResult align_burst(const Burst& burst, const AlignConfig& cfg = {}) {
    cfg.validate();
    burst.validate();
    if (burst.alternates.empty())
        throw std::invalid_argument("align_burst: need at least 2 frames");

    const bool bayer = burst.layout == BayerLayout::BayerRGGB;
    const int tile = effective_tile_size(cfg, burst.params);
    const int L = cfg.levels;

    const ImagePlane ref_match = bayer ? bayer_green_average(burst.reference) : burst.reference;
    const Pyramid ref_pyr = build_pyramid(ref_match, L);

    AlignResult result;
    result.aligned.reference = burst.reference;
    result.aligned.params = burst.params;
    result.aligned.layout = burst.layout;
    result.diag.levels = L;
    result.diag.tile_size = tile;

    for (size_t ai = 0; ai < burst.alternates.size(); ++ai) {
        const ImagePlane& alt = burst.alternates[ai];
        const ImagePlane alt_match = bayer ? bayer_green_average(alt) : alt;
        const Pyramid alt_pyr = build_pyramid(alt_match, L);

        AlternateDiagnostics diag;
        const uint64_t seed_base = stream_key(cfg.ransac.seed, 0xA115 + ai);

        auto top = detail::estimate_level_homography(ref_pyr.levels[L - 1],
                                                     alt_pyr.levels[L - 1], cfg,
                                                     stream_key(seed_base, L - 1));
        diag.global = top.value_or(Homography::identity());
        diag.global_fallback = !top.has_value();

        std::array<Homography, 4> level_hs{diag.global, diag.global, diag.global, diag.global};
        bool quadrants = false;
        int first_tile_level = L - 2;
        if (L >= 3) {
            diag.has_blocks = true;
            diag.blocks = block_homography_flow(ref_pyr.levels[L - 2], alt_pyr.levels[L - 2],
                                                diag.global, cfg, &diag.block_fallback,
                                                stream_key(seed_base, L - 2));
            level_hs = diag.blocks;
            quadrants = true;
            first_tile_level = L - 3;
        }

        TileFlow flow;
        for (int k = first_tile_level; k >= 0; --k) {
            const ImagePlane& rl = ref_pyr.levels[k];
            const ImagePlane& al = alt_pyr.levels[k];
            TileFlow init;
            if (k == first_tile_level)
                init = detail::init_flow_from_homographies(
                    rl.width, rl.height, tile, ref_pyr.levels[k + 1].width,
                    ref_pyr.levels[k + 1].height, level_hs, quadrants);
            else
                init = upscale_flow(flow, rl.width, rl.height);
            flow = tile_block_match(rl, al, tile, cfg.search_radius, &init);
            diag.init_flows.push_back(std::move(init));
            diag.flows.push_back(flow);
        }

        result.aligned.alternates.push_back(detail::warp_alternate(alt, flow, bayer));
        result.diag.alternates.push_back(std::move(diag));
    }
    return result;
}

// Re-applies previously computed flows, e.g. to warp raw frames with flows
// estimated on their stabilized counterparts.
inline Burst apply_alignment(const Burst& burst, const AlignDiagnostics& diag) {
    burst.validate();
    if (diag.alternates.size() != burst.alternates.size())
        throw std::invalid_argument("apply_alignment: diagnostics/burst mismatch");
    Burst out;
    out.reference = burst.reference;
    out.params = burst.params;
    out.layout = burst.layout;
    const bool bayer = burst.layout == BayerLayout::BayerRGGB;
    for (size_t i = 0; i < burst.alternates.size(); ++i) {
        if (diag.alternates[i].flows.empty())
            throw std::invalid_argument("apply_alignment: missing flow");
        out.alternates.push_back(detail::warp_alternate(burst.alternates[i],
                                                        diag.alternates[i].flows.back(), bayer));
    }
    return out;
}

} // namespace burstdn
