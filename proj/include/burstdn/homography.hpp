#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "burstdn/error.hpp"
#include "burstdn/image.hpp"
#include "burstdn/rng.hpp"

namespace burstdn {

// 3x3 projective map, row-major, normalized so m[8] == 1 whenever possible.
struct Homography {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Homography identity() { return Homography{}; }

    static Homography translation(double dx, double dy) {
        Homography h;
        h.m = {1, 0, dx, 0, 1, dy, 0, 0, 1};
        return h;
    }

    std::array<double, 2> apply(double x, double y) const {
        const double w = m[6] * x + m[7] * y + m[8];
        const double u = (m[0] * x + m[1] * y + m[2]) / w;
        const double v = (m[3] * x + m[4] * y + m[5]) / w;
        return {u, v};
    }

    double det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }

    bool invertible() const { return std::abs(det()) > 1e-12; }

    Homography inverse() const {
        const double d = det();
        if (std::abs(d) <= 1e-12)
            throw std::invalid_argument("Homography::inverse: singular matrix");
        Homography r;
        r.m[0] = (m[4] * m[8] - m[5] * m[7]) / d;
        r.m[1] = (m[2] * m[7] - m[1] * m[8]) / d;
        r.m[2] = (m[1] * m[5] - m[2] * m[4]) / d;
        r.m[3] = (m[5] * m[6] - m[3] * m[8]) / d;
        r.m[4] = (m[0] * m[8] - m[2] * m[6]) / d;
        r.m[5] = (m[2] * m[3] - m[0] * m[5]) / d;
        r.m[6] = (m[3] * m[7] - m[4] * m[6]) / d;
        r.m[7] = (m[1] * m[6] - m[0] * m[7]) / d;
        r.m[8] = (m[0] * m[4] - m[1] * m[3]) / d;
        r.normalize();
        return r;
    }

    // Same motion expressed at coordinates scaled by s (s=2 moves one pyramid
    // level finer): S H S^-1 with S = diag(s, s, 1).
    Homography rescaled(double s) const {
        Homography r = *this;
        r.m[2] *= s;
        r.m[5] *= s;
        r.m[6] /= s;
        r.m[7] /= s;
        return r;
    }

    void normalize() {
        const double w = m[8];
        if (std::abs(w) > 1e-12)
            for (double& v : m) v /= w;
    }
};

inline Homography compose(const Homography& a, const Homography& b) {
    // (a o b)(p) = a(b(p))
    Homography r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k)
                s += a.m[i * 3 + k] * b.m[k * 3 + j];
            r.m[i * 3 + j] = s;
        }
    r.normalize();
    return r;
}

struct PointPair {
    double ax = 0, ay = 0; // reference
    double bx = 0, by = 0; // alternate
};

struct RansacParams {
    int iters = 500;
    double inlier_px = 3.0;
    int min_inliers = 8;
    uint64_t seed = 0x5EEDBEEF;
};

namespace detail {

// Cyclic Jacobi for a symmetric 9x9; returns the eigenvector of the smallest
// eigenvalue. Plenty for normal-equation DLT after Hartley normalization.
inline std::array<double, 9> min_eigenvector9(std::array<std::array<double, 9>, 9> a) {
    std::array<std::array<double, 9>, 9> v{};
    for (int i = 0; i < 9; ++i) v[i][i] = 1.0;

    for (int sweep = 0; sweep < 50; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 9; ++p)
            for (int q = p + 1; q < 9; ++q)
                off += a[p][q] * a[p][q];
        if (off < 1e-24)
            break;
        for (int p = 0; p < 9; ++p) {
            for (int q = p + 1; q < 9; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 9; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 9; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < 9; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i < 9; ++i)
        if (a[i][i] < a[best][best]) best = i;
    std::array<double, 9> h;
    for (int i = 0; i < 9; ++i) h[i] = v[i][best];
    return h;
}

struct NormTransform {
    double scale = 1.0, cx = 0.0, cy = 0.0;
};

// Translate centroid to origin, scale mean distance to sqrt(2).
inline NormTransform hartley(const std::vector<PointPair>& pts, bool side_a,
                             const std::vector<int>& idx) {
    NormTransform t;
    double sx = 0, sy = 0;
    for (int i : idx) {
        sx += side_a ? pts[i].ax : pts[i].bx;
        sy += side_a ? pts[i].ay : pts[i].by;
    }
    const double n = static_cast<double>(idx.size());
    t.cx = sx / n;
    t.cy = sy / n;
    double dist = 0;
    for (int i : idx) {
        const double dx = (side_a ? pts[i].ax : pts[i].bx) - t.cx;
        const double dy = (side_a ? pts[i].ay : pts[i].by) - t.cy;
        dist += std::sqrt(dx * dx + dy * dy);
    }
    dist /= n;
    t.scale = dist > 1e-12 ? std::sqrt(2.0) / dist : 1.0;
    return t;
}

inline std::optional<Homography> dlt(const std::vector<PointPair>& pts,
                                     const std::vector<int>& idx) {
    if (idx.size() < 4)
        return std::nullopt;
    const NormTransform ta = hartley(pts, true, idx);
    const NormTransform tb = hartley(pts, false, idx);

    std::array<std::array<double, 9>, 9> ata{};
    auto accumulate = [&](const std::array<double, 9>& row) {
        for (int i = 0; i < 9; ++i)
            for (int j = i; j < 9; ++j)
                ata[i][j] += row[i] * row[j];
    };
    for (int i : idx) {
        const double x = (pts[i].ax - ta.cx) * ta.scale;
        const double y = (pts[i].ay - ta.cy) * ta.scale;
        const double u = (pts[i].bx - tb.cx) * tb.scale;
        const double v = (pts[i].by - tb.cy) * tb.scale;
        accumulate({-x, -y, -1, 0, 0, 0, u * x, u * y, u});
        accumulate({0, 0, 0, -x, -y, -1, v * x, v * y, v});
    }
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < i; ++j)
            ata[i][j] = ata[j][i];

    const auto h = min_eigenvector9(ata);
    Homography hn;
    for (int i = 0; i < 9; ++i) hn.m[i] = h[i];

    // denormalize: H = Tb^-1 * Hn * Ta
    Homography Ta, Tb_inv;
    Ta.m = {ta.scale, 0, -ta.scale * ta.cx, 0, ta.scale, -ta.scale * ta.cy, 0, 0, 1};
    Tb_inv.m = {1.0 / tb.scale, 0, tb.cx, 0, 1.0 / tb.scale, tb.cy, 0, 0, 1};
    Homography H = compose(Tb_inv, compose(hn, Ta));
    if (std::abs(H.m[8]) < 1e-12 || !H.invertible())
        return std::nullopt;
    H.normalize();
    return H;
}

inline bool collinear(double x0, double y0, double x1, double y1, double x2, double y2) {
    const double cross = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0);
    const double d1 = std::hypot(x1 - x0, y1 - y0);
    const double d2 = std::hypot(x2 - x0, y2 - y0);
    return std::abs(cross) <= 1e-9 * std::max(1.0, d1 * d2);
}

inline bool degenerate_sample(const std::vector<PointPair>& pts, const std::vector<int>& s) {
    for (int skip = 0; skip < 4; ++skip) {
        std::array<int, 3> t{};
        int n = 0;
        for (int i = 0; i < 4; ++i)
            if (i != skip) t[n++] = s[i];
        if (collinear(pts[t[0]].ax, pts[t[0]].ay, pts[t[1]].ax, pts[t[1]].ay,
                      pts[t[2]].ax, pts[t[2]].ay) ||
            collinear(pts[t[0]].bx, pts[t[0]].by, pts[t[1]].bx, pts[t[1]].by,
                      pts[t[2]].bx, pts[t[2]].by))
            return true;
    }
    return false;
}

} // namespace detail

// RANSAC over 4-point DLT, refit on the inliers of the best model. Returns
// nullopt when the inlier support stays below min_inliers.
inline std::optional<Homography> estimate_homography(const std::vector<PointPair>& matches,
                                                     const RansacParams& rp = {}) {
    if (matches.size() < 4)
        throw InsufficientFeatures("estimate_homography: need at least 4 matches, got " +
                                   std::to_string(matches.size()));

    const int n = static_cast<int>(matches.size());
    const double thr_sq = rp.inlier_px * rp.inlier_px;
    PixelRng rng(rp.seed);

    auto count_inliers = [&](const Homography& h, std::vector<int>* out) {
        int count = 0;
        for (int i = 0; i < n; ++i) {
            const auto [u, v] = h.apply(matches[i].ax, matches[i].ay);
            const double dx = u - matches[i].bx;
            const double dy = v - matches[i].by;
            if (dx * dx + dy * dy <= thr_sq) {
                ++count;
                if (out) out->push_back(i);
            }
        }
        return count;
    };

    int best_count = 0;
    Homography best;
    bool have_best = false;
    std::vector<int> sample(4);
    for (int it = 0; it < rp.iters; ++it) {
        for (int k = 0; k < 4; ++k) {
            int pick;
            bool fresh;
            do {
                pick = static_cast<int>(rng.next_u64() % n);
                fresh = true;
                for (int j = 0; j < k; ++j)
                    if (sample[j] == pick) fresh = false;
            } while (!fresh);
            sample[k] = pick;
        }
        if (detail::degenerate_sample(matches, sample))
            continue;
        auto h = detail::dlt(matches, sample);
        if (!h)
            continue;
        const int count = count_inliers(*h, nullptr);
        if (count > best_count) {
            best_count = count;
            best = *h;
            have_best = true;
        }
    }

    const int needed = std::max(rp.min_inliers, 4);
    if (!have_best || best_count < needed)
        return std::nullopt;

    std::vector<int> inliers;
    count_inliers(best, &inliers);
    auto refit = detail::dlt(matches, inliers);
    if (refit) {
        const int refit_count = count_inliers(*refit, nullptr);
        if (refit_count >= needed)
            return refit;
    }
    return best;
}

// Backward warp with bilinear sampling and edge clamp: out(p) = img(H(p)).
// H maps output (reference) coordinates into the input (alternate) frame.
inline ImagePlane warp_homography(const ImagePlane& img, const Homography& h) {
    if (!h.invertible())
        throw std::invalid_argument("warp_homography: non-invertible homography");
    ImagePlane out(img.width, img.height, img.domain);
    for (int y = 0; y < out.height; ++y) {
        float* dst = out.row(y);
        for (int x = 0; x < out.width; ++x) {
            const auto [u, v] = h.apply(x, y);
            dst[x] = bilinear_at(img, u, v);
        }
    }
    return out;
}

} // namespace burstdn
