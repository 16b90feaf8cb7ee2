// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "viewforge/geometry.hpp"
#include "viewforge/image.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace viewforge {

struct Sphere {
    Vec3 center = Vec3::Zero();
    double radius = 1.0;
    Vec3 albedo = Vec3::Constant(0.5);
    /// Enclosing background shell: seen from the inside, cameras live within it.
    bool shell = false;
};

/// Procedural ground-truth scene: Lambertian spheres under one directional light.
struct SceneSpec {
    std::vector<Sphere> spheres;
    Vec3 background = Vec3::Zero();
    double ambient = 0.2;
    Vec3 light_direction = Vec3(0.0, 1.0, 0.0); ///< unit vector pointing toward the light

    void validate() const;
};

struct SurfaceHit {
    double distance = 0.0;
    Vec3 point;
    Vec3 normal; ///< facing the side the surface is seen from
    std::size_t sphere = 0;
};

/// Nearest intersection along the ray with t > 0.
std::optional<SurfaceHit> trace(const SceneSpec &scene, const Ray &ray);

/// albedo · (ambient + (1 − ambient) · max(0, n·l)).
Vec3 shade(const SceneSpec &scene, const SurfaceHit &hit);

/// Radiance seen along a ray: shaded hit or background.
Vec3 radiance(const SceneSpec &scene, const Ray &ray);

/// Ray-traced rendering through pixel centres. Deterministic and view-independent.
Image render_scene(const SceneSpec &scene, const Pose &pose, const Intrinsics &intrinsics);

/// Names accepted by preset_scene.
const std::vector<std::string> &scene_preset_names();

/// "single_sphere", "cluster" or "room"; throws InvalidArgument listing valid names otherwise.
SceneSpec preset_scene(std::string_view name, std::uint64_t seed);

} // namespace viewforge
