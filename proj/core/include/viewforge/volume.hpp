// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "viewforge/geometry.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace viewforge {

/// Axis-aligned box.
struct Box {
    Vec3 min = Vec3::Constant(-1.0);
    Vec3 max = Vec3::Constant(1.0);

    bool valid() const { return (min.array() < max.array()).all(); }
    double diagonal() const { return (max - min).norm(); }
    bool contains(const Vec3 &p) const { return (p.array() >= min.array()).all() && (p.array() <= max.array()).all(); }

    /// Parametric entry/exit distances (entry clamped to ≥ 0); empty on a miss.
    std::optional<std::pair<double, double>> intersect(const Vec3 &origin, const Vec3 &direction) const;
};

/// Dense density + colour field.
///
/// Each voxel holds four raw parameters (density, r, g, b) located at the voxel
/// centre. Samples interpolate the raw values trilinearly, then activate:
/// density = density_scale · softplus(raw), colour = sigmoid(raw).
class VoxelGrid {
public:
    static constexpr int kParamsPerVoxel = 4;
    static constexpr double kDefaultDensityScale = 25.0;
    static constexpr double kDefaultRawDensity = -9.0; ///< σ ≈ 3e-3: transparent, no initial haze

    VoxelGrid() = default;
    VoxelGrid(std::array<int, 3> resolution, Box bounds, Vec3 background = Vec3::Zero(),
              double density_scale = kDefaultDensityScale, double raw_density = kDefaultRawDensity,
              double raw_color = 0.0);

    const std::array<int, 3> &resolution() const noexcept { return resolution_; }
    const Box &bounds() const noexcept { return bounds_; }
    const Vec3 &background() const noexcept { return background_; }
    double density_scale() const noexcept { return density_scale_; }
    Vec3 voxel_size() const { return (bounds_.max - bounds_.min).cwiseQuotient(Vec3(resolution_[0], resolution_[1], resolution_[2])); }
    std::size_t voxel_count() const noexcept { return params_.size() / kParamsPerVoxel; }

    std::size_t voxel_index(int x, int y, int z) const noexcept {
        return (static_cast<std::size_t>(z) * resolution_[1] + y) * resolution_[0] + x;
    }

    /// Raw (pre-activation) parameters, kParamsPerVoxel per voxel.
    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }

    double density(std::size_t voxel) const;
    Vec3 color(std::size_t voxel) const;

    /// Rounds every raw parameter to the nearest float32 (checkpoint precision).
    void round_to_float();

private:
    std::array<int, 3> resolution_{0, 0, 0};
    Box bounds_;
    Vec3 background_ = Vec3::Zero();
    double density_scale_ = kDefaultDensityScale;
    std::vector<double> params_;
};

double softplus(double x);
double sigmoid(double x);

/// Trilinear stencil of a point: the eight surrounding voxel centres (coordinates
/// clamped to the grid) and their weights. `inside` is false outside the bounds.
struct Stencil {
    std::array<std::size_t, 8> voxel{};
    std::array<double, 8> weight{};
    bool inside = false;
};

Stencil locate(const VoxelGrid &grid, const Vec3 &point);

struct RenderResult {
    Vec3 color = Vec3::Zero();
    double transmittance = 1.0; ///< T_final
    double opacity = 0.0;       ///< Σ T_i·α_i
};

/// Emission-absorption rendering with n_samples midpoint samples on [near, far]:
/// δ = (far − near)/n, α_i = 1 − exp(−σ_i·δ), T_i = Π_{j<i}(1 − α_j),
/// colour = Σ T_i·α_i·c_i + T_final·background. Samples outside the bounds have σ = 0.
RenderResult volume_render(const VoxelGrid &grid, const Vec3 &origin, const Vec3 &direction, double near, double far,
                           int n_samples);

/// Accumulates ∂⟨upstream, colour⟩/∂raw into `gradient` (same layout as params()).
/// Returns the forward result.
RenderResult render_gradients(const VoxelGrid &grid, const Vec3 &origin, const Vec3 &direction, double near,
                              double far, int n_samples, const Vec3 &upstream, std::span<double> gradient);

/// Forward pass that keeps what the backward pass needs; used by the optimizer.
class RayTape {
public:
    RenderResult forward(const VoxelGrid &grid, const Vec3 &origin, const Vec3 &direction, double near, double far,
                         int n_samples);

    /// Requires a preceding forward() on the same grid.
    void backward(const VoxelGrid &grid, const Vec3 &upstream, std::span<double> gradient) const;

private:
    struct Sample {
        Stencil stencil;
        double raw_density = 0.0;
        double alpha = 0.0;
        double transmittance = 1.0;
        Vec3 color = Vec3::Zero();
    };
    std::vector<Sample> samples_;
    double delta_ = 0.0;
    RenderResult result_;
};

/// Renders a full image through pixel centres; rays missing the bounds see the background.
Image render_image(const VoxelGrid &grid, const Pose &pose, const Intrinsics &intrinsics, int n_samples);

} // namespace viewforge
