#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <vector>

#include "burstdn/image.hpp"

namespace burstdn {

// Per-tile integer displacement field: alt(x + dx, y + dy) ~ ref(x, y).
struct TileFlow {
    int tile_size = 16;
    int grid_w = 0;
    int grid_h = 0;
    std::vector<std::array<int, 2>> offsets; // row-major (dx, dy)

    static TileFlow zeros(int img_w, int img_h, int tile) {
        if (tile < 2)
            throw std::invalid_argument("TileFlow: tile size must be >= 2");
        TileFlow f;
        f.tile_size = tile;
        f.grid_w = (img_w + tile - 1) / tile;
        f.grid_h = (img_h + tile - 1) / tile;
        f.offsets.assign(static_cast<size_t>(f.grid_w) * f.grid_h, {0, 0});
        return f;
    }

    std::array<int, 2>& at(int tx, int ty) {
        return offsets[static_cast<size_t>(ty) * grid_w + tx];
    }
    const std::array<int, 2>& at(int tx, int ty) const {
        return offsets[static_cast<size_t>(ty) * grid_w + tx];
    }

    bool grid_matches(int img_w, int img_h) const {
        return grid_w == (img_w + tile_size - 1) / tile_size &&
               grid_h == (img_h + tile_size - 1) / tile_size;
    }
};

namespace detail {

// Mean absolute difference over the tile's in-bounds pixels; returns the
// valid pixel count through `count`.
inline double tile_l1_cost(const ImagePlane& ref, const ImagePlane& alt, int x0, int y0,
                           int x1, int y1, int dx, int dy, int& count) {
    double sum = 0.0;
    count = 0;
    for (int y = y0; y < y1; ++y) {
        const int sy = y + dy;
        if (sy < 0 || sy >= alt.height)
            continue;
        const float* rr = ref.row(y);
        const float* ar = alt.row(sy);
        const int sx0 = std::max(x0, -dx);
        const int sx1 = std::min(x1, alt.width - dx);
        for (int x = sx0; x < sx1; ++x)
            sum += std::abs(static_cast<double>(rr[x]) - ar[x + dx]);
        count += std::max(0, sx1 - sx0);
    }
    return count > 0 ? sum / count : std::numeric_limits<double>::infinity();
}

} // namespace detail

// Integer L1 search per tile within init +/- radius. Ties prefer the smaller
// displacement (|dx|+|dy|, then lexicographic), which keeps flat regions at
// their initialization.
inline TileFlow tile_block_match(const ImagePlane& ref, const ImagePlane& alt, int tile,
                                 int radius, const TileFlow* init = nullptr) {
    require_same_dims(ref, alt, "tile_block_match");
    if (radius < 0)
        throw std::invalid_argument("tile_block_match: negative radius");
    TileFlow flow = TileFlow::zeros(ref.width, ref.height, tile);
    if (init) {
        if (init->tile_size != tile || init->grid_w != flow.grid_w ||
            init->grid_h != flow.grid_h)
            throw std::invalid_argument("tile_block_match: init flow grid mismatch");
    }

    for (int ty = 0; ty < flow.grid_h; ++ty) {
        for (int tx = 0; tx < flow.grid_w; ++tx) {
            const int x0 = tx * tile;
            const int y0 = ty * tile;
            const int x1 = std::min(x0 + tile, ref.width);
            const int y1 = std::min(y0 + tile, ref.height);
            const int cx = init ? init->at(tx, ty)[0] : 0;
            const int cy = init ? init->at(tx, ty)[1] : 0;

            double best_cost = std::numeric_limits<double>::infinity();
            int best_dx = cx, best_dy = cy;
            int best_l1 = std::abs(cx) + std::abs(cy);
            for (int dy = cy - radius; dy <= cy + radius; ++dy) {
                for (int dx = cx - radius; dx <= cx + radius; ++dx) {
                    int count = 0;
                    const double cost =
                        detail::tile_l1_cost(ref, alt, x0, y0, x1, y1, dx, dy, count);
                    if (count == 0)
                        continue;
                    const int l1 = std::abs(dx) + std::abs(dy);
                    const bool better =
                        cost < best_cost ||
                        (cost == best_cost &&
                         (l1 < best_l1 ||
                          (l1 == best_l1 && (dx < best_dx || (dx == best_dx && dy < best_dy)))));
                    if (better) {
                        best_cost = cost;
                        best_dx = dx;
                        best_dy = dy;
                        best_l1 = l1;
                    }
                }
            }
            flow.at(tx, ty) = {best_dx, best_dy};
        }
    }
    return flow;
}

// Carries a coarser-level flow one level finer: vectors double, each fine
// tile reads the coarse tile covering its centre.
inline TileFlow upscale_flow(const TileFlow& coarse, int img_w, int img_h) {
    TileFlow fine = TileFlow::zeros(img_w, img_h, coarse.tile_size);
    for (int ty = 0; ty < fine.grid_h; ++ty) {
        const int py = std::min(ty / 2, coarse.grid_h - 1);
        for (int tx = 0; tx < fine.grid_w; ++tx) {
            const int px = std::min(tx / 2, coarse.grid_w - 1);
            fine.at(tx, ty) = {coarse.at(px, py)[0] * 2, coarse.at(px, py)[1] * 2};
        }
    }
    return fine;
}

// Shifts each tile by its integer vector, edge-clamped. No interpolation.
inline ImagePlane warp_tiles(const ImagePlane& img, const TileFlow& flow) {
    if (!flow.grid_matches(img.width, img.height))
        throw std::invalid_argument("warp_tiles: flow grid does not match image");
    ImagePlane out(img.width, img.height, img.domain);
    const int tile = flow.tile_size;
    for (int ty = 0; ty < flow.grid_h; ++ty) {
        for (int tx = 0; tx < flow.grid_w; ++tx) {
            const auto [dx, dy] = flow.at(tx, ty);
            const int x1 = std::min((tx + 1) * tile, img.width);
            const int y1 = std::min((ty + 1) * tile, img.height);
            for (int y = ty * tile; y < y1; ++y)
                for (int x = tx * tile; x < x1; ++x)
                    out.at(x, y) = img.at_clamped(x + dx, y + dy);
        }
    }
    return out;
}

} // namespace burstdn
