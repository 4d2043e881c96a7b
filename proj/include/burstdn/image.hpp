#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace burstdn {

// Tag tracking which intensity space a plane lives in. Transitions happen
// only through the vst module's forward/inverse maps.
enum class Domain { RawLinear, GainNormalized, Vst };

inline const char* domain_name(Domain d) {
    switch (d) {
    case Domain::RawLinear: return "raw-linear";
    case Domain::GainNormalized: return "gain-normalized";
    case Domain::Vst: return "vst";
    }
    return "?";
}

// Single-channel row-major float raster.
struct ImagePlane {
    int width = 0;
    int height = 0;
    Domain domain = Domain::RawLinear;
    std::vector<float> samples;

    ImagePlane() = default;

    ImagePlane(int w, int h, Domain d = Domain::RawLinear, float fill = 0.0f)
        : width(w), height(h), domain(d) {
        if (w < 1 || h < 1)
            throw std::invalid_argument("ImagePlane: dimensions must be >= 1, got " +
                                        std::to_string(w) + "x" + std::to_string(h));
        samples.assign(static_cast<size_t>(w) * static_cast<size_t>(h), fill);
    }

    size_t size() const { return samples.size(); }

    float& at(int x, int y) { return samples[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return samples[static_cast<size_t>(y) * width + x]; }

    float at_clamped(int x, int y) const {
        x = std::clamp(x, 0, width - 1);
        y = std::clamp(y, 0, height - 1);
        return at(x, y);
    }

    const float* row(int y) const { return samples.data() + static_cast<size_t>(y) * width; }
    float* row(int y) { return samples.data() + static_cast<size_t>(y) * width; }

    bool same_dims(const ImagePlane& o) const { return width == o.width && height == o.height; }
};

// Convenience for tests and small fixtures: row-major values.
inline ImagePlane make_plane(int w, int h, std::initializer_list<float> values,
                             Domain d = Domain::RawLinear) {
    ImagePlane p(w, h, d);
    if (values.size() != p.size())
        throw std::invalid_argument("make_plane: value count mismatch");
    std::copy(values.begin(), values.end(), p.samples.begin());
    return p;
}

inline void require_same_dims(const ImagePlane& a, const ImagePlane& b, const char* where) {
    if (!a.same_dims(b))
        throw std::invalid_argument(std::string(where) + ": dimension mismatch " +
                                    std::to_string(a.width) + "x" + std::to_string(a.height) +
                                    " vs " + std::to_string(b.width) + "x" +
                                    std::to_string(b.height));
}

inline void require_domain(const ImagePlane& img, Domain expected, const char* where) {
    if (img.domain != expected)
        throw std::invalid_argument(std::string(where) + ": expected " +
                                    domain_name(expected) + " input, got " +
                                    domain_name(img.domain));
}

// Bilinear sample at a real-valued coordinate, edge-clamped. Exact at
// integer coordinates (weights degenerate to 1 and 0).
inline float bilinear_at(const ImagePlane& img, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    int x0 = static_cast<int>(x);
    int y0 = static_cast<int>(y);
    int x1 = std::min(x0 + 1, img.width - 1);
    int y1 = std::min(y0 + 1, img.height - 1);
    float fx = static_cast<float>(x - x0);
    float fy = static_cast<float>(y - y0);
    float v00 = img.at(x0, y0), v10 = img.at(x1, y0);
    float v01 = img.at(x0, y1), v11 = img.at(x1, y1);
    float top = v00 * (1.0f - fx) + v10 * fx;
    float bot = v01 * (1.0f - fx) + v11 * fx;
    return top * (1.0f - fy) + bot * fy;
}

inline std::pair<float, float> plane_min_max(const ImagePlane& img) {
    auto [lo, hi] = std::minmax_element(img.samples.begin(), img.samples.end());
    return {*lo, *hi};
}

// Summed-area table with one row/column of zero padding; double accumulators
// so window statistics stay exact enough on large planes.
struct IntegralImage {
    int width = 0;  // of the source plane
    int height = 0;
    std::vector<double> sums; // (width+1) x (height+1)

    explicit IntegralImage(const ImagePlane& img)
        : width(img.width), height(img.height),
          sums(static_cast<size_t>(width + 1) * (height + 1), 0.0) {
        const int stride = width + 1;
        for (int y = 0; y < height; ++y) {
            double row_acc = 0.0;
            const float* src = img.row(y);
            double* out = sums.data() + static_cast<size_t>(y + 1) * stride;
            const double* above = sums.data() + static_cast<size_t>(y) * stride;
            for (int x = 0; x < width; ++x) {
                row_acc += src[x];
                out[x + 1] = above[x + 1] + row_acc;
            }
        }
    }

    IntegralImage(const ImagePlane& img, bool squared)
        : width(img.width), height(img.height),
          sums(static_cast<size_t>(width + 1) * (height + 1), 0.0) {
        const int stride = width + 1;
        for (int y = 0; y < height; ++y) {
            double row_acc = 0.0;
            const float* src = img.row(y);
            double* out = sums.data() + static_cast<size_t>(y + 1) * stride;
            const double* above = sums.data() + static_cast<size_t>(y) * stride;
            for (int x = 0; x < width; ++x) {
                double v = src[x];
                row_acc += squared ? v * v : v;
                out[x + 1] = above[x + 1] + row_acc;
            }
        }
    }

    // Sum over [x0, x1] x [y0, y1], inclusive and clamped to the plane.
    double box_sum(int x0, int y0, int x1, int y1) const {
        x0 = std::max(x0, 0);
        y0 = std::max(y0, 0);
        x1 = std::min(x1, width - 1);
        y1 = std::min(y1, height - 1);
        const int stride = width + 1;
        auto s = [&](int x, int y) { return sums[static_cast<size_t>(y) * stride + x]; };
        return s(x1 + 1, y1 + 1) - s(x0, y1 + 1) - s(x1 + 1, y0) + s(x0, y0);
    }

    static int box_count(int x0, int y0, int x1, int y1, int w, int h) {
        x0 = std::max(x0, 0);
        y0 = std::max(y0, 0);
        x1 = std::min(x1, w - 1);
        y1 = std::min(y1, h - 1);
        if (x1 < x0 || y1 < y0) return 0;
        return (x1 - x0 + 1) * (y1 - y0 + 1);
    }
};

} // namespace burstdn
