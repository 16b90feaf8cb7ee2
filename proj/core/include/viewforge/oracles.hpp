// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "viewforge/sampler.hpp"
#include "viewforge/scene.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace viewforge {

/// Exact noise prediction for x0 ~ N(mu, tau²·I): the posterior mean is
/// (α·τ²·x_t + σ²·mu)/(α²·τ² + σ²) and ε̂ = (x_t − α·E[x0|x_t])/σ.
/// `mu` holds one value (broadcast) or one per element. Throws when σ = 0.
std::vector<Array> gaussian_oracle_denoise(const DenoiserRequest &request, std::span<const double> mu, double tau);

class GaussianOracle final : public Denoiser {
public:
    GaussianOracle(Array mu, double tau);
    std::vector<Array> predict_noise(const DenoiserRequest &request) const override;

private:
    Array mu_;
    double tau_;
};

/// Smooth additive field (bilinearly upsampled 4×4 grid of N(0,1) values per
/// channel, times `amplitude`), fully determined by (seed, step_id, slot).
Array perturbation_field(int width, int height, double amplitude, std::uint64_t seed, std::uint64_t step_id,
                         std::uint64_t slot);

/// The clean target the scene oracle steers toward, in pixel space: the
/// ground-truth render plus the step's perturbation, clamped to [0,1].
Image scene_oracle_target(const SceneSpec &scene, const Pose &pose, const Intrinsics &intrinsics,
                          double inconsistency_sigma, std::uint64_t seed, std::uint64_t step_id, std::uint64_t slot);

/// Noise implied by predicting x0 = scene_oracle_target for every target (mid-gray
/// when the request is unconditional). Throws when σ = 0.
std::vector<Array> scene_oracle_denoise(const DenoiserRequest &request, const SceneSpec &scene,
                                        double inconsistency_sigma, std::uint64_t seed);

class SceneOracle final : public Denoiser {
public:
    SceneOracle(SceneSpec scene, double inconsistency_sigma, std::uint64_t seed);
    std::vector<Array> predict_noise(const DenoiserRequest &request) const override;

private:
    SceneSpec scene_;
    double inconsistency_sigma_;
    std::uint64_t seed_;
};

} // namespace viewforge
