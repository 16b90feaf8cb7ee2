// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/volume.hpp"

#include "viewforge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace viewforge {

std::optional<std::pair<double, double>> Box::intersect(const Vec3 &origin, const Vec3 &direction) const {
    double t0 = 0.0;
    double t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (direction[a] == 0.0) {
            if (origin[a] < min[a] || origin[a] > max[a]) {
                return std::nullopt;
            }
            continue;
        }
        const double inv = 1.0 / direction[a];
        double lo = (min[a] - origin[a]) * inv;
        double hi = (max[a] - origin[a]) * inv;
        if (lo > hi) {
            std::swap(lo, hi);
        }
        t0 = std::max(t0, lo);
        t1 = std::min(t1, hi);
    }
    if (!(t1 > t0)) {
        return std::nullopt;
    }
    return std::make_pair(t0, t1);
}

double softplus(double x) {
    return x > 30.0 ? x : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

VoxelGrid::VoxelGrid(std::array<int, 3> resolution, Box bounds, Vec3 background, double density_scale,
                     double raw_density, double raw_color)
    : resolution_(resolution), bounds_(bounds), background_(background), density_scale_(density_scale) {
    for (int r : resolution_) {
        if (r < 2) {
            throw InvalidArgument("voxel grid resolution must be at least 2 along every axis");
        }
    }
    if (!bounds_.valid()) {
        throw InvalidArgument("voxel grid bounds must satisfy min < max componentwise");
    }
    if (!(density_scale_ > 0.0)) {
        throw InvalidArgument("voxel grid density scale must be positive");
    }
    const std::size_t voxels = static_cast<std::size_t>(resolution_[0]) * resolution_[1] * resolution_[2];
    params_.resize(voxels * kParamsPerVoxel);
    for (std::size_t v = 0; v < voxels; ++v) {
        params_[v * kParamsPerVoxel] = raw_density;
        for (int c = 1; c < kParamsPerVoxel; ++c) {
            params_[v * kParamsPerVoxel + c] = raw_color;
        }
    }
}

double VoxelGrid::density(std::size_t voxel) const {
    return density_scale_ * softplus(params_[voxel * kParamsPerVoxel]);
}

Vec3 VoxelGrid::color(std::size_t voxel) const {
    const double *p = &params_[voxel * kParamsPerVoxel];
    return {sigmoid(p[1]), sigmoid(p[2]), sigmoid(p[3])};
}

void VoxelGrid::round_to_float() {
    for (double &p : params_) {
        p = static_cast<double>(static_cast<float>(p));
    }
}

Stencil locate(const VoxelGrid &grid, const Vec3 &point) {
    Stencil s;
    const Box &b = grid.bounds();
    if (!b.contains(point)) {
        return s;
    }
    s.inside = true;
    const auto &res = grid.resolution();
    const Vec3 size = grid.voxel_size();
    int base[3];
    double frac[3];
    for (int a = 0; a < 3; ++a) {
        const double g = std::clamp((point[a] - b.min[a]) / size[a] - 0.5, 0.0, static_cast<double>(res[a] - 1));
        base[a] = std::min(static_cast<int>(g), res[a] - 2);
        frac[a] = g - base[a];
    }
    int k = 0;
    for (int dz = 0; dz < 2; ++dz) {
        const double wz = dz ? frac[2] : 1.0 - frac[2];
        for (int dy = 0; dy < 2; ++dy) {
            const double wy = dy ? frac[1] : 1.0 - frac[1];
            for (int dx = 0; dx < 2; ++dx) {
                const double wx = dx ? frac[0] : 1.0 - frac[0];
                s.voxel[k] = grid.voxel_index(base[0] + dx, base[1] + dy, base[2] + dz);
                s.weight[k] = wx * wy * wz;
                ++k;
            }
        }
    }
    return s;
}

namespace {

void check_render_args(double near, double far, int n_samples) {
    if (!(near < far)) {
        throw InvalidArgument("volume_render: near must be below far");
    }
    if (n_samples < 1) {
        throw InvalidArgument("volume_render: n_samples must be at least 1");
    }
}

} // namespace

RenderResult RayTape::forward(const VoxelGrid &grid, const Vec3 &origin, const Vec3 &direction, double near,
                              double far, int n_samples) {
    check_render_args(near, far, n_samples);
    samples_.resize(static_cast<std::size_t>(n_samples));
    delta_ = (far - near) / n_samples;
    const auto params = grid.params();
    double transmittance = 1.0;
    RenderResult r;
    for (int i = 0; i < n_samples; ++i) {
        Sample &s = samples_[static_cast<std::size_t>(i)];
        s.stencil = locate(grid, origin + (near + (i + 0.5) * delta_) * direction);
        s.transmittance = transmittance;
        if (!s.stencil.inside) {
            s.alpha = 0.0;
            s.raw_density = 0.0;
            s.color.setZero();
            continue;
        }
        double raw[VoxelGrid::kParamsPerVoxel] = {0.0, 0.0, 0.0, 0.0};
        for (int k = 0; k < 8; ++k) {
            const double *p = &params[s.stencil.voxel[k] * VoxelGrid::kParamsPerVoxel];
            const double w = s.stencil.weight[k];
            raw[0] += w * p[0];
            raw[1] += w * p[1];
            raw[2] += w * p[2];
            raw[3] += w * p[3];
        }
        s.raw_density = raw[0];
        const double sigma = grid.density_scale() * softplus(raw[0]);
        s.alpha = -std::expm1(-sigma * delta_);
        s.color = Vec3(sigmoid(raw[1]), sigmoid(raw[2]), sigmoid(raw[3]));
        const double weight = transmittance * s.alpha;
        r.color += weight * s.color;
        r.opacity += weight;
        transmittance *= 1.0 - s.alpha;
    }
    r.transmittance = transmittance;
    r.color += transmittance * grid.background();
    result_ = r;
    return r;
}

void RayTape::backward(const VoxelGrid &grid, const Vec3 &upstream, std::span<double> gradient) const {
    if (gradient.size() != grid.params().size()) {
        throw DimensionError("render backward: gradient buffer does not match the grid parameters");
    }
    // suffix = Σ_{j>i} T_j·α_j·c_j + T_final·background, built back to front.
    Vec3 suffix = result_.transmittance * grid.background();
    for (auto it = samples_.rbegin(); it != samples_.rend(); ++it) {
        const Sample &s = *it;
        if (!s.stencil.inside) {
            continue;
        }
        const double weight = s.transmittance * s.alpha;
        const double t_next = s.transmittance * (1.0 - s.alpha);
        const double d_sigma = delta_ * upstream.dot(t_next * s.color - suffix);
        const double d_raw_density = d_sigma * grid.density_scale() * sigmoid(s.raw_density);
        double d_raw_color[3];
        for (int c = 0; c < 3; ++c) {
            d_raw_color[c] = upstream[c] * weight * s.color[c] * (1.0 - s.color[c]);
        }
        suffix += weight * s.color;
        for (int k = 0; k < 8; ++k) {
            const double w = s.stencil.weight[k];
            if (w == 0.0) {
                continue;
            }
            double *g = &gradient[s.stencil.voxel[k] * VoxelGrid::kParamsPerVoxel];
            g[0] += w * d_raw_density;
            g[1] += w * d_raw_color[0];
            g[2] += w * d_raw_color[1];
            g[3] += w * d_raw_color[2];
        }
    }
}

RenderResult volume_render(const VoxelGrid &grid, const Vec3 &origin, const Vec3 &direction, double near, double far,
                           int n_samples) {
    RayTape tape;
    return tape.forward(grid, origin, direction, near, far, n_samples);
}

RenderResult render_gradients(const VoxelGrid &grid, const Vec3 &origin, const Vec3 &direction, double near,
                              double far, int n_samples, const Vec3 &upstream, std::span<double> gradient) {
    RayTape tape;
    const RenderResult r = tape.forward(grid, origin, direction, near, far, n_samples);
    tape.backward(grid, upstream, gradient);
    return r;
}

Image render_image(const VoxelGrid &grid, const Pose &pose, const Intrinsics &intrinsics, int n_samples) {
    Image image(intrinsics.width, intrinsics.height);
    RayTape tape;
    for (int y = 0; y < intrinsics.height; ++y) {
        for (int x = 0; x < intrinsics.width; ++x) {
            const Ray ray = pixel_ray(pose, intrinsics, x + 0.5, y + 0.5);
            Vec3 rgb = grid.background();
            if (const auto span = grid.bounds().intersect(ray.origin, ray.direction)) {
                rgb = tape.forward(grid, ray.origin, ray.direction, span->first, span->second, n_samples).color;
            }
            for (int c = 0; c < 3; ++c) {
                image.at(x, y, c) = std::clamp(rgb[c], 0.0, 1.0);
            }
        }
    }
    return image;
}

} // namespace viewforge
