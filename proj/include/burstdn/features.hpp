#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "burstdn/image.hpp"
#include "burstdn/rng.hpp"

namespace burstdn {

struct Keypoint {
    int x = 0;
    int y = 0;
    float score = 0.0f;
};

// 256-bit binary descriptor.
struct Descriptor {
    std::array<uint64_t, 4> bits{};

    int hamming(const Descriptor& o) const {
        int d = 0;
        for (int i = 0; i < 4; ++i)
            d += std::popcount(bits[i] ^ o.bits[i]);
        return d;
    }
};

namespace detail {

// Bresenham circle of radius 3, clockwise from 12 o'clock.
inline constexpr int kFastRing[16][2] = {
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},  {2, 2},  {1, 3},
    {0, 3},  {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};

inline bool has_arc9(uint32_t mask16) {
    // longest circular run of set bits; wrap by doubling
    uint32_t m = mask16 | (mask16 << 16);
    int run = 0;
    for (int i = 0; i < 32; ++i) {
        if (m & (1u << i)) {
            if (++run >= 9) return true;
        } else {
            run = 0;
        }
    }
    return false;
}

} // namespace detail

// Segment-test corner detector (9 contiguous ring pixels brighter or darker
// than center by `threshold`), with 3x3 non-max suppression on the score map
// and a cap on the returned count. Images smaller than the 7x7 ring yield an
// empty list.
inline std::vector<Keypoint> detect_fast(const ImagePlane& img, float threshold,
                                         int max_points) {
    std::vector<Keypoint> out;
    if (img.width < 7 || img.height < 7 || max_points <= 0)
        return out;

    ImagePlane score(img.width, img.height, img.domain, 0.0f);
    for (int y = 3; y < img.height - 3; ++y) {
        for (int x = 3; x < img.width - 3; ++x) {
            const float p = img.at(x, y);
            uint32_t bright = 0, dark = 0;
            float sum_bright = 0.0f, sum_dark = 0.0f;
            for (int i = 0; i < 16; ++i) {
                const float v = img.at(x + detail::kFastRing[i][0], y + detail::kFastRing[i][1]);
                if (v > p + threshold) {
                    bright |= 1u << i;
                    sum_bright += v - p - threshold;
                } else if (v < p - threshold) {
                    dark |= 1u << i;
                    sum_dark += p - v - threshold;
                }
            }
            float s = 0.0f;
            if (detail::has_arc9(bright)) s = sum_bright;
            if (detail::has_arc9(dark)) s = std::max(s, sum_dark);
            score.at(x, y) = s;
        }
    }

    for (int y = 3; y < img.height - 3; ++y) {
        for (int x = 3; x < img.width - 3; ++x) {
            const float s = score.at(x, y);
            if (s <= 0.0f) continue;
            bool keep = true;
            for (int dy = -1; dy <= 1 && keep; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const float n = score.at_clamped(x + dx, y + dy);
                    // plateaus resolve to the first pixel in raster order
                    const bool earlier = dy < 0 || (dy == 0 && dx < 0);
                    if (earlier ? (n >= s) : (n > s)) {
                        keep = false;
                        break;
                    }
                }
            }
            if (keep) out.push_back({x, y, s});
        }
    }

    std::sort(out.begin(), out.end(), [](const Keypoint& a, const Keypoint& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    if (static_cast<int>(out.size()) > max_points)
        out.resize(max_points);
    return out;
}

namespace detail {

struct BriefPattern {
    std::array<std::array<int8_t, 4>, 256> pairs; // x1,y1,x2,y2 offsets
};

// Fixed Gaussian-distributed sampling pattern over a 31x31 patch. Constant
// seed keeps descriptors comparable across processes.
inline const BriefPattern& brief_pattern() {
    static const BriefPattern pattern = [] {
        BriefPattern p;
        PixelRng rng(0xB41EFU);
        auto draw = [&]() {
            double v = rng.gaussian() * 6.2; // sigma = patch/5
            int i = static_cast<int>(std::lround(v));
            return static_cast<int8_t>(std::clamp(i, -15, 15));
        };
        for (auto& pr : p.pairs) {
            do {
                pr = {draw(), draw(), draw(), draw()};
            } while (pr[0] == pr[2] && pr[1] == pr[3]);
        }
        return p;
    }();
    return pattern;
}

// 5x5 box blur (radius 2), edge-clamped.
inline ImagePlane box_blur2(const ImagePlane& img) {
    IntegralImage integral(img);
    ImagePlane out(img.width, img.height, img.domain);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double s = integral.box_sum(x - 2, y - 2, x + 2, y + 2);
            const int c = IntegralImage::box_count(x - 2, y - 2, x + 2, y + 2,
                                                   img.width, img.height);
            out.at(x, y) = static_cast<float>(s / c);
        }
    }
    return out;
}

} // namespace detail

struct DescribedKeypoints {
    std::vector<Keypoint> keypoints; // the subset far enough from the border
    std::vector<Descriptor> descriptors;
};

// 256 smoothed-intensity comparisons on the fixed pattern. Keypoints closer
// than 15 px to a border are dropped so every sample stays in bounds.
inline DescribedKeypoints brief_describe(const ImagePlane& img,
                                         const std::vector<Keypoint>& keypoints) {
    const ImagePlane smooth = detail::box_blur2(img);
    const auto& pattern = detail::brief_pattern();

    DescribedKeypoints out;
    for (const Keypoint& kp : keypoints) {
        if (kp.x < 15 || kp.y < 15 || kp.x >= img.width - 15 || kp.y >= img.height - 15)
            continue;
        Descriptor d;
        for (int i = 0; i < 256; ++i) {
            const auto& pr = pattern.pairs[i];
            const float a = smooth.at(kp.x + pr[0], kp.y + pr[1]);
            const float b = smooth.at(kp.x + pr[2], kp.y + pr[3]);
            if (a < b)
                d.bits[i >> 6] |= uint64_t(1) << (i & 63);
        }
        out.keypoints.push_back(kp);
        out.descriptors.push_back(d);
    }
    return out;
}

// Mutual nearest neighbours under Hamming distance with a ratio test
// (best < 0.8 * second-best). Ties resolve to the lower index.
inline std::vector<std::pair<int, int>> match_descriptors(const std::vector<Descriptor>& a,
                                                          const std::vector<Descriptor>& b,
                                                          double ratio = 0.8) {
    std::vector<std::pair<int, int>> matches;
    if (a.empty() || b.empty())
        return matches;

    const int inf = std::numeric_limits<int>::max();
    std::vector<int> best_for_b(b.size(), -1);
    std::vector<int> best_dist_b(b.size(), inf);
    for (size_t i = 0; i < a.size(); ++i) {
        for (size_t j = 0; j < b.size(); ++j) {
            const int d = a[i].hamming(b[j]);
            if (d < best_dist_b[j]) {
                best_dist_b[j] = d;
                best_for_b[j] = static_cast<int>(i);
            }
        }
    }

    for (size_t i = 0; i < a.size(); ++i) {
        int best = -1, d1 = inf, d2 = inf;
        for (size_t j = 0; j < b.size(); ++j) {
            const int d = a[i].hamming(b[j]);
            if (d < d1) {
                d2 = d1;
                d1 = d;
                best = static_cast<int>(j);
            } else if (d < d2) {
                d2 = d;
            }
        }
        if (best < 0) continue;
        if (d2 != inf && !(d1 < ratio * d2))
            continue; // ambiguous
        if (best_for_b[best] != static_cast<int>(i))
            continue; // not mutual
        matches.emplace_back(static_cast<int>(i), best);
    }
    return matches;
}

} // namespace burstdn
