// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/oracles.hpp"

#include "viewforge/errors.hpp"
#include "viewforge/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace viewforge {

namespace {

constexpr int kFieldGrid = 4;

void require_noise(const DenoiserRequest &request) {
    if (!(request.coefficients.sigma > 0.0)) {
        throw InvalidArgument("oracle denoiser: sigma is zero, there is no noise to predict");
    }
}

Array implied_noise(const Array &x_t, const Array &x0, const Coefficients &c) {
    Array eps(x_t.size());
    for (std::size_t i = 0; i < eps.size(); ++i) {
        eps[i] = (x_t[i] - c.alpha * x0[i]) / c.sigma;
    }
    return eps;
}

} // namespace

std::vector<Array> gaussian_oracle_denoise(const DenoiserRequest &request, std::span<const double> mu, double tau) {
    require_noise(request);
    if (!(tau >= 0.0)) {
        throw InvalidArgument("gaussian oracle: tau must be non-negative");
    }
    if (mu.empty()) {
        throw InvalidArgument("gaussian oracle: mu is empty");
    }
    const double a = request.coefficients.alpha;
    const double s = request.coefficients.sigma;
    const double tau2 = tau * tau;
    const double denom = a * a * tau2 + s * s;
    std::vector<Array> out;
    out.reserve(request.noisy_targets.size());
    for (const Array &x : request.noisy_targets) {
        if (mu.size() != 1 && mu.size() != x.size()) {
            throw DimensionError("gaussian oracle: mu has " + std::to_string(mu.size()) + " values for a target of " +
                                 std::to_string(x.size()));
        }
        Array eps(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double m = mu.size() == 1 ? mu[0] : mu[i];
            const double posterior_mean = (a * tau2 * x[i] + s * s * m) / denom;
            eps[i] = (x[i] - a * posterior_mean) / s;
        }
        out.push_back(std::move(eps));
    }
    return out;
}

GaussianOracle::GaussianOracle(Array mu, double tau) : mu_(std::move(mu)), tau_(tau) {
    if (mu_.empty() || !(tau_ >= 0.0)) {
        throw InvalidArgument("GaussianOracle: need non-empty mu and tau >= 0");
    }
}

std::vector<Array> GaussianOracle::predict_noise(const DenoiserRequest &request) const {
    return gaussian_oracle_denoise(request, mu_, tau_);
}

Array perturbation_field(int width, int height, double amplitude, std::uint64_t seed, std::uint64_t step_id,
                         std::uint64_t slot) {
    Rng rng(mix_seed(mix_seed(seed, step_id), slot));
    double grid[3][kFieldGrid][kFieldGrid];
    for (auto &channel : grid) {
        for (auto &row : channel) {
            for (double &v : row) {
                v = rng.normal();
            }
        }
    }
    Array field(static_cast<std::size_t>(width) * height * 3);
    for (int y = 0; y < height; ++y) {
        const double gy = (y + 0.5) / height * (kFieldGrid - 1);
        const int y0 = std::min(static_cast<int>(gy), kFieldGrid - 2);
        const double fy = gy - y0;
        for (int x = 0; x < width; ++x) {
            const double gx = (x + 0.5) / width * (kFieldGrid - 1);
            const int x0 = std::min(static_cast<int>(gx), kFieldGrid - 2);
            const double fx = gx - x0;
            for (int c = 0; c < 3; ++c) {
                const auto &g = grid[c];
                const double v = (1 - fy) * ((1 - fx) * g[y0][x0] + fx * g[y0][x0 + 1]) +
                                 fy * ((1 - fx) * g[y0 + 1][x0] + fx * g[y0 + 1][x0 + 1]);
                field[(static_cast<std::size_t>(y) * width + x) * 3 + c] = amplitude * v;
            }
        }
    }
    return field;
}

Image scene_oracle_target(const SceneSpec &scene, const Pose &pose, const Intrinsics &intrinsics,
                          double inconsistency_sigma, std::uint64_t seed, std::uint64_t step_id, std::uint64_t slot) {
    Image image = render_scene(scene, pose, intrinsics);
    if (inconsistency_sigma > 0.0) {
        const Array field =
            perturbation_field(intrinsics.width, intrinsics.height, inconsistency_sigma, seed, step_id, slot);
        auto px = image.data();
        for (std::size_t i = 0; i < px.size(); ++i) {
            px[i] = std::clamp(px[i] + field[i], 0.0, 1.0);
        }
    }
    return image;
}

std::vector<Array> scene_oracle_denoise(const DenoiserRequest &request, const SceneSpec &scene,
                                        double inconsistency_sigma, std::uint64_t seed) {
    require_noise(request);
    if (request.conditional && request.target_poses.size() != request.noisy_targets.size()) {
        throw InvalidArgument("scene oracle: request carries " + std::to_string(request.target_poses.size()) +
                              " target poses for " + std::to_string(request.noisy_targets.size()) + " targets");
    }
    std::vector<Array> out;
    out.reserve(request.noisy_targets.size());
    for (std::size_t i = 0; i < request.noisy_targets.size(); ++i) {
        const Array &x = request.noisy_targets[i];
        Array x0;
        if (request.conditional) {
            x0 = image_to_model(scene_oracle_target(scene, request.target_poses[i], request.intrinsics,
                                                    inconsistency_sigma, seed, request.step_id, i));
        } else {
            x0.assign(x.size(), 0.0); // mid-gray
        }
        if (x0.size() != x.size()) {
            throw DimensionError("scene oracle: target size does not match the intrinsics");
        }
        out.push_back(implied_noise(x, x0, request.coefficients));
    }
    return out;
}

SceneOracle::SceneOracle(SceneSpec scene, double inconsistency_sigma, std::uint64_t seed)
    : scene_(std::move(scene)), inconsistency_sigma_(inconsistency_sigma), seed_(seed) {
    scene_.validate();
    if (!(inconsistency_sigma_ >= 0.0)) {
        throw InvalidArgument("SceneOracle: inconsistency_sigma must be non-negative");
    }
}

std::vector<Array> SceneOracle::predict_noise(const DenoiserRequest &request) const {
    return scene_oracle_denoise(request, scene_, inconsistency_sigma_, seed_);
}

} // namespace viewforge
