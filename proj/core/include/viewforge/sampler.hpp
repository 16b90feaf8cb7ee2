// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "viewforge/geometry.hpp"
#include "viewforge/noise_schedule.hpp"
#include "viewforge/scheduler.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace viewforge {

/// Flat per-view sample in model space ([−1,1] for images, pixel-major RGB).
using Array = std::vector<double>;

/// Everything a denoiser sees for one network evaluation.
///
/// Views are ordered conditioning first, then targets; `raymaps` and `mask`
/// follow that order (mask = true for conditioning). When `conditional` is false
/// the denoiser must ignore the conditioning views and poses (the unconditional
/// branch of classifier-free guidance).
struct DenoiserRequest {
    std::vector<Array> noisy_targets;
    std::vector<Array> clean_conditioning;
    std::vector<Raymap> raymaps;
    std::vector<bool> mask;
    double t = 1.0;
    Coefficients coefficients;
    bool conditional = true;

    // Generation context: world poses of the targets, shared intrinsics, plan step.
    std::vector<Pose> target_poses;
    Intrinsics intrinsics;
    std::uint64_t step_id = 0;

    std::size_t view_count() const { return clean_conditioning.size() + noisy_targets.size(); }

    /// Throws InvalidArgument when raymap or mask counts disagree with the views.
    void validate() const;
};

/// Predicts the noise in every target of a request. Implementations must be safe
/// to call concurrently.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual std::vector<Array> predict_noise(const DenoiserRequest &request) const = 0;
};

/// eps_uncond + w·(eps_cond − eps_uncond).
Array cfg_combine(std::span<const double> eps_cond, std::span<const double> eps_uncond, double w);

/// Deterministic DDIM update from coefficients at t to coefficients at s:
/// x0̂ = clip((x_t − σ_t·ε̂)/α_t), x_s = α_s·x0̂ + σ_s·ε̂. `clip` ≤ 0 disables clipping.
Array ddim_step(std::span<const double> x_t, std::span<const double> eps_hat, const Coefficients &at,
                const Coefficients &as, double clip = 1.0);

/// Same update with coefficients taken from the schedule; requires 0 ≤ s ≤ t ≤ 1.
Array ddim_step(std::span<const double> x_t, std::span<const double> eps_hat, double t, double s,
                const NoiseSchedule &schedule, int n_targets, double clip = 1.0);

struct SamplerOptions {
    int steps = 50;
    double cfg = 3.0;
    std::uint64_t seed = 0;
    int raymap_divisor = 1;
    double clip = 1.0;
    int threads = 1;
    NoiseSchedule schedule;
};

/// Runs DDIM from t = 1 to t = 0 over `opts.steps` uniform steps, starting from
/// `request.noisy_targets`. The unconditional branch is skipped when cfg == 1.
std::vector<Array> ddim_sample(const Denoiser &denoiser, DenoiserRequest request, const SamplerOptions &opts);

/// Pixel [0,1] ↔ model space [−1,1].
Array image_to_model(const Image &image);
Image model_to_image(std::span<const double> values, int width, int height);

/// Generates one group of targets conditioned on `cond`. Raymaps are relative to
/// the first conditioning view; the schedule shift uses the number of targets.
/// Initial noise is seeded by (opts.seed, step_id).
std::vector<Image> sample_group(const Denoiser &denoiser, const std::vector<View> &cond,
                                const std::vector<Pose> &target_poses, const SamplerOptions &opts,
                                std::uint64_t step_id = 0);

/// Runs every plan step (anchor steps first, then the independent group steps on
/// up to opts.threads threads). Returns the observed views followed by one view
/// per target id, in id order.
std::vector<View> execute_plan(const Denoiser &denoiser, const SamplingPlan &plan, const std::vector<View> &observed,
                               const SamplerOptions &opts);

} // namespace viewforge
