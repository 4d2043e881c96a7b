#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "burstdn/image.hpp"

namespace burstdn {

struct MetricReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    double l1 = 0.0;
    double grad_l1 = 0.0;
    double combined_loss = 0.0;
};

// Gamma-corrected PSNR: both planes are clamped to [0, peak], normalized and
// raised to `gamma` before the MSE. Capped at 99 dB (identical inputs).
inline double psnr(const ImagePlane& a, const ImagePlane& b, double peak,
                   double gamma = 1.0 / 2.2) {
    require_same_dims(a, b, "psnr");
    if (!(peak > 0.0))
        throw std::invalid_argument("psnr: peak must be positive");
    double mse = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double va = std::pow(std::clamp(static_cast<double>(a.samples[i]), 0.0, peak) / peak, gamma);
        const double vb = std::pow(std::clamp(static_cast<double>(b.samples[i]), 0.0, peak) / peak, gamma);
        mse += (va - vb) * (va - vb);
    }
    mse /= static_cast<double>(a.size());
    if (mse <= 0.0)
        return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

namespace detail {

// 11x11 Gaussian window, sigma 1.5, normalized.
inline const std::array<double, 11>& ssim_window() {
    static const std::array<double, 11> w = [] {
        std::array<double, 11> v{};
        double sum = 0.0;
        for (int i = 0; i < 11; ++i) {
            v[i] = std::exp(-0.5 * (i - 5) * (i - 5) / (1.5 * 1.5));
            sum += v[i];
        }
        for (auto& x : v) x /= sum;
        return v;
    }();
    return w;
}

// Valid-region separable filtering: output is (w-10) x (h-10).
inline std::vector<double> ssim_filter(const std::vector<double>& src, int w, int h) {
    const auto& win = ssim_window();
    const int vw = w - 10, vh = h - 10;
    std::vector<double> tmp(static_cast<size_t>(vw) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < vw; ++x) {
            double s = 0.0;
            for (int i = 0; i < 11; ++i)
                s += win[i] * src[static_cast<size_t>(y) * w + x + i];
            tmp[static_cast<size_t>(y) * vw + x] = s;
        }
    std::vector<double> out(static_cast<size_t>(vw) * vh, 0.0);
    for (int y = 0; y < vh; ++y)
        for (int x = 0; x < vw; ++x) {
            double s = 0.0;
            for (int i = 0; i < 11; ++i)
                s += win[i] * tmp[static_cast<size_t>(y + i) * vw + x];
            out[static_cast<size_t>(y) * vw + x] = s;
        }
    return out;
}

} // namespace detail

// Mean single-scale SSIM over the valid window positions; k1 = 0.01,
// k2 = 0.03 against the given peak value.
inline double ssim(const ImagePlane& a, const ImagePlane& b, double peak) {
    require_same_dims(a, b, "ssim");
    if (a.width < 11 || a.height < 11)
        throw std::invalid_argument("ssim: needs at least 11x11 input");
    if (!(peak > 0.0))
        throw std::invalid_argument("ssim: peak must be positive");

    const int w = a.width, h = a.height;
    const size_t n = a.size();
    std::vector<double> pa(n), pb(n), paa(n), pbb(n), pab(n);
    for (size_t i = 0; i < n; ++i) {
        const double va = a.samples[i], vb = b.samples[i];
        pa[i] = va;
        pb[i] = vb;
        paa[i] = va * va;
        pbb[i] = vb * vb;
        pab[i] = va * vb;
    }
    const auto mu_a = detail::ssim_filter(pa, w, h);
    const auto mu_b = detail::ssim_filter(pb, w, h);
    const auto m_aa = detail::ssim_filter(paa, w, h);
    const auto m_bb = detail::ssim_filter(pbb, w, h);
    const auto m_ab = detail::ssim_filter(pab, w, h);

    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    double total = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        const double va = m_aa[i] - ma * ma;
        const double vb = m_bb[i] - mb * mb;
        const double cov = m_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(mu_a.size());
}

struct LossTerms {
    double l1 = 0.0;
    double grad_l1 = 0.0;
    double combined = 0.0;
};

// L1 plus forward-difference gradient L1: the gradient operator convolves
// with [-1, 1] horizontally and vertically over the valid region.
inline LossTerms l1_gradient_loss(const ImagePlane& candidate, const ImagePlane& target,
                                  double w1 = 0.5) {
    require_same_dims(candidate, target, "l1_gradient_loss");
    const int w = candidate.width, h = candidate.height;

    double l1 = 0.0;
    for (size_t i = 0; i < candidate.size(); ++i)
        l1 += std::abs(static_cast<double>(candidate.samples[i]) - target.samples[i]);
    l1 /= static_cast<double>(candidate.size());

    double grad_sum = 0.0;
    long grad_n = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x + 1 < w; ++x) {
            const double gc = static_cast<double>(candidate.at(x + 1, y)) - candidate.at(x, y);
            const double gt = static_cast<double>(target.at(x + 1, y)) - target.at(x, y);
            grad_sum += std::abs(gc - gt);
            ++grad_n;
        }
    for (int y = 0; y + 1 < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double gc = static_cast<double>(candidate.at(x, y + 1)) - candidate.at(x, y);
            const double gt = static_cast<double>(target.at(x, y + 1)) - target.at(x, y);
            grad_sum += std::abs(gc - gt);
            ++grad_n;
        }

    LossTerms t;
    t.l1 = l1;
    t.grad_l1 = grad_n > 0 ? grad_sum / static_cast<double>(grad_n) : 0.0;
    t.combined = t.l1 + w1 * t.grad_l1;
    return t;
}

inline MetricReport metric_report(const ImagePlane& candidate, const ImagePlane& target,
                                  double peak, double gamma = 1.0 / 2.2, double w1 = 0.5) {
    MetricReport r;
    r.psnr_db = psnr(candidate, target, peak, gamma);
    r.ssim = ssim(candidate, target, peak);
    const LossTerms t = l1_gradient_loss(candidate, target, w1);
    r.l1 = t.l1;
    r.grad_l1 = t.grad_l1;
    r.combined_loss = t.combined;
    return r;
}

} // namespace burstdn
