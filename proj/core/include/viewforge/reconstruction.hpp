// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "viewforge/geometry.hpp"
#include "viewforge/volume.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace viewforge {

/// Training schedule and loss settings for reconstruct().
struct LossConfig {
    double b_max = 15.0;
    int iterations = 1000;
    double lr_start = 0.04;
    double lr_end = 1e-3;
    double perceptual_weight = 0.25;
    int patch = 32;
    double global_anneal_end = 0.1;

    int grid_resolution = 64;
    int n_samples = 128;
    int patches_per_batch = 2;
    double tv_weight = 1e-4;
    // Multipliers on the annealed lr per parameter group. A dense grid needs its
    // raw density to travel ~10 units within the schedule.
    double density_lr_scale = 20.0;
    double color_lr_scale = 3.0;
    Vec3 background = Vec3::Zero();
    int threads = 1;

    void validate() const;
};

/// exp(−b·s²).
double distance_weight(double s, double b);

struct AnnealState {
    double b = 0.0;
    double global_gen_weight = 1.0;
    double lr = 0.0;
};

/// b = b_max·iter/total, global_gen_weight = 1 + (global_anneal_end − 1)·iter/total,
/// lr = lr_start·(lr_end/lr_start)^(iter/total).
AnnealState anneal_schedules(int iter, int total, const LossConfig &cfg);

/// Gradient-domain perceptual stand-in on interleaved RGB patches of the given
/// size: mean squared difference of horizontal and vertical finite differences,
/// averaged over up to three dyadic (2×2 box-filtered) scales. When `grad_a` is
/// non-empty it receives ∂proxy/∂a.
double perceptual_proxy(std::span<const double> a, std::span<const double> b, int width, int height,
                        std::span<double> grad_a = {});

/// Image overload; throws DimensionError on a shape mismatch.
double perceptual_proxy(const Image &a, const Image &b);

/// Distance from each view's camera centre to the nearest observed camera centre,
/// divided by `normalizer` (observed views get 0).
std::vector<double> observed_distances(const std::vector<View> &views, double normalizer);

struct ReconstructionResult {
    VoxelGrid grid;
    std::vector<double> loss_history;       ///< weighted training loss per iteration
    std::vector<double> photometric_history; ///< unweighted patch MSE per iteration
};

/// Fits a voxel grid to the posed views with patch-based adaptive-moment descent.
/// Observed views weigh 1; generated/anchor views weigh
/// distance_weight(s_v, b)·global_gen_weight with s_v from observed_distances
/// normalised by the bounds diagonal. Deterministic for a given seed and
/// independent of cfg.threads.
ReconstructionResult reconstruct(const std::vector<View> &views, const Box &scene_bounds, const LossConfig &cfg,
                                 std::uint64_t seed);

} // namespace viewforge
