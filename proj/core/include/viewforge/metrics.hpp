// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "viewforge/image.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace viewforge {

inline constexpr double kPsnrCap = 99.0;

/// −10·log10(MSE) over all channels for unit dynamic range; `cap` when MSE = 0.
double psnr(const Image &a, const Image &b, double cap = kPsnrCap);

/// Structural similarity on luma (0.2126, 0.7152, 0.0722) with an 11×11 Gaussian
/// window (σ = 1.5), C1 = 0.01², C2 = 0.03², averaged over valid window positions.
double ssim(const Image &a, const Image &b);

struct ViewMetrics {
    std::int64_t view_id = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    double proxy = 0.0; ///< gradient-domain perceptual proxy, not a learned metric
};

struct MetricReport {
    std::vector<ViewMetrics> per_view;
    ViewMetrics aggregate; ///< means; view_id is the view count

    /// Recomputes `aggregate` from `per_view`.
    void finalize();
    std::string to_csv() const;
};

/// Scores `rendered[i]` against `truth[i]` with ids `ids[i]`.
MetricReport evaluate_views(const std::vector<Image> &rendered, const std::vector<Image> &truth,
                            const std::vector<std::int64_t> &ids);

} // namespace viewforge
