#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "burstdn/image.hpp"
#include "burstdn/noise.hpp"

namespace burstdn {

enum class BayerLayout { Gray, BayerRGGB };

// Ordered frame set: one reference plus N-1 alternates in temporal order.
struct Burst {
    ImagePlane reference;
    std::vector<ImagePlane> alternates;
    NoiseParams params;
    BayerLayout layout = BayerLayout::Gray;

    int frame_count() const { return 1 + static_cast<int>(alternates.size()); }

    void validate() const {
        if (reference.width < 1 || reference.height < 1)
            throw std::invalid_argument("Burst: empty reference frame");
        for (const auto& alt : alternates) {
            if (!alt.same_dims(reference))
                throw std::invalid_argument("Burst: frame dimension mismatch");
            if (alt.domain != reference.domain)
                throw std::invalid_argument("Burst: frame domain mismatch");
        }
        if (layout == BayerLayout::BayerRGGB &&
            (reference.width % 2 != 0 || reference.height % 2 != 0))
            throw std::invalid_argument("Burst: RGGB mosaic needs even dimensions");
    }
};

// RGGB mosaic <-> four half-resolution planes, order R, G1, G2, B.
inline std::array<ImagePlane, 4> bayer_split(const ImagePlane& mosaic) {
    if (mosaic.width % 2 != 0 || mosaic.height % 2 != 0)
        throw std::invalid_argument("bayer_split: mosaic needs even dimensions");
    const int hw = mosaic.width / 2, hh = mosaic.height / 2;
    std::array<ImagePlane, 4> planes{
        ImagePlane(hw, hh, mosaic.domain), ImagePlane(hw, hh, mosaic.domain),
        ImagePlane(hw, hh, mosaic.domain), ImagePlane(hw, hh, mosaic.domain)};
    for (int y = 0; y < hh; ++y)
        for (int x = 0; x < hw; ++x) {
            planes[0].at(x, y) = mosaic.at(2 * x, 2 * y);
            planes[1].at(x, y) = mosaic.at(2 * x + 1, 2 * y);
            planes[2].at(x, y) = mosaic.at(2 * x, 2 * y + 1);
            planes[3].at(x, y) = mosaic.at(2 * x + 1, 2 * y + 1);
        }
    return planes;
}

inline ImagePlane bayer_join(const std::array<ImagePlane, 4>& planes) {
    const int hw = planes[0].width, hh = planes[0].height;
    for (const auto& p : planes)
        if (p.width != hw || p.height != hh)
            throw std::invalid_argument("bayer_join: plane dimension mismatch");
    ImagePlane mosaic(hw * 2, hh * 2, planes[0].domain);
    for (int y = 0; y < hh; ++y)
        for (int x = 0; x < hw; ++x) {
            mosaic.at(2 * x, 2 * y) = planes[0].at(x, y);
            mosaic.at(2 * x + 1, 2 * y) = planes[1].at(x, y);
            mosaic.at(2 * x, 2 * y + 1) = planes[2].at(x, y);
            mosaic.at(2 * x + 1, 2 * y + 1) = planes[3].at(x, y);
        }
    return mosaic;
}

// Half-resolution luma proxy for matching: the mean of the two greens.
inline ImagePlane bayer_green_average(const ImagePlane& mosaic) {
    if (mosaic.width % 2 != 0 || mosaic.height % 2 != 0)
        throw std::invalid_argument("bayer_green_average: mosaic needs even dimensions");
    const int hw = mosaic.width / 2, hh = mosaic.height / 2;
    ImagePlane g(hw, hh, mosaic.domain);
    for (int y = 0; y < hh; ++y)
        for (int x = 0; x < hw; ++x)
            g.at(x, y) = 0.5f * (mosaic.at(2 * x + 1, 2 * y) + mosaic.at(2 * x, 2 * y + 1));
    return g;
}

} // namespace burstdn
