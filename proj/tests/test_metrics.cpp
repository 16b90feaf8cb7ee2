// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/errors.hpp"
#include "viewforge/metrics.hpp"
#include "viewforge/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

namespace vf = viewforge;

namespace {

vf::Image make_image(int w, int h, const std::function<double(int, int, int)> &f) {
    vf::Image img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                img.at(x, y, c) = f(x, y, c);
            }
        }
    }
    return img;
}

// Same analytic images as tests/oracles/ssim_reference.py.
vf::Image waves() {
    return make_image(24, 20, [](int x, int y, int c) { return 0.5 + 0.4 * std::sin(0.37 * x + 0.21 * y + c); });
}
vf::Image ramp() {
    return make_image(24, 20, [](int x, int y, int c) { return (x + 2.0 * y + 5.0 * c) / (24 + 2 * 20 + 10); });
}
vf::Image checker() {
    return make_image(24, 20, [](int x, int y, int) { return ((x / 3) + (y / 3)) % 2 == 0 ? 0.8 : 0.2; });
}

vf::Image map(const vf::Image &a, const std::function<double(double)> &f) {
    vf::Image out = a;
    for (double &v : out.data()) {
        v = f(v);
    }
    return out;
}

vf::Image blend(const vf::Image &a, const vf::Image &b) {
    vf::Image out = a;
    for (std::size_t i = 0; i < out.data().size(); ++i) {
        out.data()[i] = 0.5 * (a.data()[i] + b.data()[i]);
    }
    return out;
}

} // namespace

TEST(Psnr, KnownValues) {
    const vf::Image a = make_image(8, 8, [](int, int, int) { return 0.5; });
    const vf::Image b = map(a, [](double v) { return v + 0.1; });
    EXPECT_NEAR(vf::psnr(a, b), 20.0, 1e-9);
    EXPECT_EQ(vf::psnr(a, a), 99.0);
    const vf::Image black = make_image(8, 8, [](int, int, int) { return 0.0; });
    const vf::Image white = make_image(8, 8, [](int, int, int) { return 1.0; });
    EXPECT_NEAR(vf::psnr(black, white), 0.0, 1e-12);
    EXPECT_EQ(vf::psnr(a, a, 60.0), 60.0);
}

TEST(Psnr, ShapeMismatchThrows) {
    EXPECT_THROW(vf::psnr(vf::Image(4, 4), vf::Image(4, 5)), vf::DimensionError);
    EXPECT_THROW(vf::psnr(vf::Image(), vf::Image()), vf::DimensionError);
}

TEST(Ssim, IdentityAndSymmetry) {
    const vf::Image w = waves();
    const vf::Image r = ramp();
    EXPECT_NEAR(vf::ssim(w, w), 1.0, 1e-12);
    EXPECT_NEAR(vf::ssim(w, r), vf::ssim(r, w), 1e-14);
    EXPECT_LE(vf::ssim(w, r), 1.0);
    EXPECT_THROW(vf::ssim(vf::Image(10, 10), vf::Image(10, 10)), vf::DimensionError);
}

TEST(Ssim, MatchesFrozenScikitImageValues) {
    // Frozen from tests/oracles/ssim_reference.json.
    EXPECT_NEAR(vf::ssim(waves(), map(waves(), [](double v) { return 1.0 - v; })), -0.7005747061674028, 1e-9);
    EXPECT_NEAR(vf::ssim(waves(), ramp()), 0.09575340224302784, 1e-9);
    EXPECT_NEAR(vf::ssim(checker(), map(checker(), [](double v) { return 0.5 * v + 0.25; })), 0.8014135781878553,
                1e-9);
    EXPECT_NEAR(vf::ssim(ramp(), blend(ramp(), waves())), 0.32330479618347424, 1e-9);
}

TEST(Ssim, DecreasesWithNoise) {
    vf::Rng rng(61);
    const vf::Image w = waves();
    double previous = 1.0;
    for (double amp : {0.02, 0.08, 0.2}) {
        const vf::Image noisy = map(w, [&](double v) { return v + amp * rng.normal(); });
        const double s = vf::ssim(w, noisy);
        EXPECT_LT(s, previous);
        previous = s;
    }
}

TEST(MetricReport, AggregatesAndCsv) {
    const vf::Image w = waves();
    const vf::Image r = ramp();
    const vf::MetricReport report = vf::evaluate_views({w, r}, {w, w}, {3, 9});
    ASSERT_EQ(report.per_view.size(), 2u);
    EXPECT_EQ(report.per_view[0].view_id, 3);
    EXPECT_EQ(report.per_view[0].psnr, 99.0);
    EXPECT_NEAR(report.per_view[0].ssim, 1.0, 1e-12);
    EXPECT_EQ(report.per_view[0].proxy, 0.0);
    EXPECT_GT(report.per_view[1].proxy, 0.0);
    EXPECT_EQ(report.aggregate.view_id, 2);
    EXPECT_NEAR(report.aggregate.psnr, 0.5 * (99.0 + report.per_view[1].psnr), 1e-12);

    const std::string csv = report.to_csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "view_id,psnr,ssim,proxy");
    EXPECT_NE(csv.find("\n3,99.000000,1.000000,"), std::string::npos);
    EXPECT_THROW(vf::evaluate_views({w}, {w, w}, {1, 2}), vf::DimensionError);
}
