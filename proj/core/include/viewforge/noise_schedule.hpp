// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

namespace viewforge {

/// Signal and noise scales of x_t = alpha·x0 + sigma·eps.
struct Coefficients {
    double alpha = 1.0;
    double sigma = 0.0;

    /// alpha² = sigmoid(λ), sigma² = sigmoid(−λ).
    static Coefficients from_logsnr(double logsnr);
};

/// Log-SNR noise schedule over t ∈ [0,1] (t = 1 is pure noise).
///
/// The base curve is a cosine schedule in log-SNR form, truncated so that it
/// spans [logsnr_min, logsnr_max], then offset by a constant. Jointly denoising N
/// target views subtracts ln N on top.
class NoiseSchedule {
public:
    static constexpr double kDefaultLogsnrMin = -20.0;
    static constexpr double kDefaultLogsnrMax = 20.0;
    /// +2·ln 8: the schedule is tuned for 8× smaller images than the 512 px the
    /// cosine curve is usually paired with, so it is shifted toward low noise.
    static inline const double kDefaultOffset = 2.0 * std::log(8.0);

    NoiseSchedule() : NoiseSchedule(kDefaultLogsnrMin, kDefaultLogsnrMax, kDefaultOffset) {}
    NoiseSchedule(double logsnr_min, double logsnr_max, double offset);

    /// Strictly decreasing in t.
    double base_logsnr(double t) const;

    /// base_logsnr(t) − ln(n_targets).
    double logsnr(double t, int n_targets) const;

    Coefficients coefficients(double t, int n_targets) const;

    double offset() const noexcept { return offset_; }

private:
    double angle_start_ = 0.0;
    double angle_span_ = 0.0;
    double offset_ = 0.0;
};

/// −ln(n): the multi-view shift for n jointly generated targets (0 when n = 1).
double multiview_shift(int n_targets);

/// base_logsnr(t) − ln(n_targets).
double shifted_logsnr(const NoiseSchedule &schedule, double t, int n_targets);

} // namespace viewforge
