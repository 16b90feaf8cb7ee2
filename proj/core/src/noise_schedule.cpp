// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/noise_schedule.hpp"

#include "viewforge/errors.hpp"

#include <string>

namespace viewforge {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

Coefficients Coefficients::from_logsnr(double logsnr) {
    return {std::sqrt(sigmoid(logsnr)), std::sqrt(sigmoid(-logsnr))};
}

NoiseSchedule::NoiseSchedule(double logsnr_min, double logsnr_max, double offset) : offset_(offset) {
    if (!(logsnr_min < logsnr_max)) {
        throw InvalidArgument("noise schedule: logsnr_min must be below logsnr_max");
    }
    // λ(t) = −2·ln tan(a + b·t) hits logsnr_max at t = 0 and logsnr_min at t = 1.
    angle_start_ = std::atan(std::exp(-0.5 * logsnr_max));
    angle_span_ = std::atan(std::exp(-0.5 * logsnr_min)) - angle_start_;
}

double NoiseSchedule::base_logsnr(double t) const {
    return -2.0 * std::log(std::tan(angle_start_ + angle_span_ * t)) + offset_;
}

double NoiseSchedule::logsnr(double t, int n_targets) const {
    return base_logsnr(t) + multiview_shift(n_targets);
}

Coefficients NoiseSchedule::coefficients(double t, int n_targets) const {
    return Coefficients::from_logsnr(logsnr(t, n_targets));
}

double multiview_shift(int n_targets) {
    if (n_targets < 1) {
        throw InvalidArgument("multiview shift needs at least one target, got " + std::to_string(n_targets));
    }
    return n_targets == 1 ? 0.0 : -std::log(static_cast<double>(n_targets));
}

double shifted_logsnr(const NoiseSchedule &schedule, double t, int n_targets) {
    return schedule.logsnr(t, n_targets);
}

} // namespace viewforge
