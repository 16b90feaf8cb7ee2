// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/metrics.hpp"

#include "viewforge/errors.hpp"
#include "viewforge/reconstruction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>

namespace viewforge {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void require_same_shape(const Image &a, const Image &b, const char *what) {
    if (a.width() != b.width() || a.height() != b.height() || a.empty()) {
        throw DimensionError(std::string(what) + ": images must be non-empty with equal shapes (" +
                             std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                             std::to_string(b.width()) + "x" + std::to_string(b.height()) + ")");
    }
}

std::vector<double> luma(const Image &img) {
    std::vector<double> y(img.pixel_count());
    const auto d = img.data();
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = 0.2126 * d[i * 3] + 0.7152 * d[i * 3 + 1] + 0.0722 * d[i * 3 + 2];
    }
    return y;
}

std::array<double, kWindow> gaussian_taps() {
    std::array<double, kWindow> taps{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double x = i - kWindow / 2;
        taps[i] = std::exp(-x * x / (2.0 * kWindowSigma * kWindowSigma));
        sum += taps[i];
    }
    for (double &t : taps) {
        t /= sum;
    }
    return taps;
}

} // namespace

double psnr(const Image &a, const Image &b, double cap) {
    require_same_shape(a, b, "psnr");
    const auto da = a.data();
    const auto db = b.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = da[i] - db[i];
        sum += d * d;
    }
    const double mse = sum / static_cast<double>(da.size());
    if (mse == 0.0) {
        return cap;
    }
    return std::min(cap, -10.0 * std::log10(mse));
}

double ssim(const Image &a, const Image &b) {
    require_same_shape(a, b, "ssim");
    if (a.width() < kWindow || a.height() < kWindow) {
        throw DimensionError("ssim: images must be at least 11x11");
    }
    const std::vector<double> x = luma(a);
    const std::vector<double> y = luma(b);
    const auto taps = gaussian_taps();
    const int w = a.width();
    const int nx = w - kWindow + 1;
    const int ny = a.height() - kWindow + 1;
    double total = 0.0;
    for (int oy = 0; oy < ny; ++oy) {
        for (int ox = 0; ox < nx; ++ox) {
            double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (int j = 0; j < kWindow; ++j) {
                for (int i = 0; i < kWindow; ++i) {
                    const double g = taps[j] * taps[i];
                    const std::size_t k = static_cast<std::size_t>(oy + j) * w + ox + i;
                    mx += g * x[k];
                    my += g * y[k];
                    sxx += g * x[k] * x[k];
                    syy += g * y[k] * y[k];
                    sxy += g * x[k] * y[k];
                }
            }
            const double vx = sxx - mx * mx;
            const double vy = syy - my * my;
            const double cxy = sxy - mx * my;
            total += ((2.0 * mx * my + kC1) * (2.0 * cxy + kC2)) / ((mx * mx + my * my + kC1) * (vx + vy + kC2));
        }
    }
    return total / (static_cast<double>(nx) * ny);
}

void MetricReport::finalize() {
    aggregate = ViewMetrics{};
    aggregate.view_id = static_cast<std::int64_t>(per_view.size());
    if (per_view.empty()) {
        return;
    }
    for (const ViewMetrics &m : per_view) {
        aggregate.psnr += m.psnr;
        aggregate.ssim += m.ssim;
        aggregate.proxy += m.proxy;
    }
    const double n = static_cast<double>(per_view.size());
    aggregate.psnr /= n;
    aggregate.ssim /= n;
    aggregate.proxy /= n;
}

std::string MetricReport::to_csv() const {
    std::string out = "view_id,psnr,ssim,proxy\n";
    char line[128];
    auto row = [&](const std::string &id, const ViewMetrics &m) {
        std::snprintf(line, sizeof line, ",%.6f,%.6f,%.8f\n", m.psnr, m.ssim, m.proxy);
        out += id;
        out += line;
    };
    for (const ViewMetrics &m : per_view) {
        row(std::to_string(m.view_id), m);
    }
    row("mean", aggregate);
    return out;
}

MetricReport evaluate_views(const std::vector<Image> &rendered, const std::vector<Image> &truth,
                            const std::vector<std::int64_t> &ids) {
    if (rendered.size() != truth.size() || rendered.size() != ids.size()) {
        throw DimensionError("evaluate_views: rendered, truth and id lists differ in length");
    }
    MetricReport report;
    for (std::size_t i = 0; i < rendered.size(); ++i) {
        report.per_view.push_back({ids[i], psnr(rendered[i], truth[i]), ssim(rendered[i], truth[i]),
                                   perceptual_proxy(rendered[i], truth[i])});
    }
    report.finalize();
    return report;
}

} // namespace viewforge
