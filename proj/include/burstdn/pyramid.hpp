#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "burstdn/image.hpp"

namespace burstdn {

// Coarse-to-fine image stack; level 0 is full resolution.
struct Pyramid {
    std::vector<ImagePlane> levels;
};

// 2x2 box average, dimensions halve with floor. The averaging suppresses
// noise before matching, which is the point of going coarse first.
inline ImagePlane box_downsample2(const ImagePlane& img) {
    if (img.width < 2 || img.height < 2)
        throw std::invalid_argument("box_downsample2: plane too small");
    ImagePlane out(img.width / 2, img.height / 2, img.domain);
    for (int y = 0; y < out.height; ++y) {
        const float* r0 = img.row(2 * y);
        const float* r1 = img.row(2 * y + 1);
        float* dst = out.row(y);
        for (int x = 0; x < out.width; ++x)
            dst[x] = 0.25f * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
    }
    return out;
}

inline Pyramid build_pyramid(const ImagePlane& img, int levels) {
    if (levels < 2)
        throw std::invalid_argument("build_pyramid: need at least 2 levels");
    const int min_dim = 1 << (levels - 1);
    if (img.width < min_dim || img.height < min_dim)
        throw std::invalid_argument("build_pyramid: image " + std::to_string(img.width) + "x" +
                                    std::to_string(img.height) + " too small for " +
                                    std::to_string(levels) + " levels");
    Pyramid p;
    p.levels.reserve(levels);
    p.levels.push_back(img);
    for (int k = 1; k < levels; ++k)
        p.levels.push_back(box_downsample2(p.levels.back()));
    return p;
}

} // namespace burstdn
