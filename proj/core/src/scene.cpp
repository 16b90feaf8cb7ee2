// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/scene.hpp"

#include "viewforge/errors.hpp"
#include "viewforge/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace viewforge {

namespace {

constexpr double kHitEpsilon = 1e-9;

const Vec3 kDefaultLight = Vec3(0.45, 1.0, -0.55).normalized();

bool unit_rgb(const Vec3 &c) {
    return c.allFinite() && (c.array() >= 0.0).all() && (c.array() <= 1.0).all();
}

SceneSpec make_cluster(std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0xc1u));
    SceneSpec scene;
    scene.background = Vec3(0.08, 0.08, 0.1);
    scene.ambient = 0.25;
    scene.light_direction = kDefaultLight;

    const auto count = static_cast<std::size_t>(rng.integer(5, 12));
    while (scene.spheres.size() < count) {
        Sphere s;
        s.radius = rng.uniform(0.12, 0.28);
        // Rejection-sample a centre whose sphere stays inside the unit ball.
        const double reach = 1.0 - s.radius;
        do {
            s.center = Vec3(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        } while (s.center.squaredNorm() > 1.0);
        s.center *= reach;
        s.albedo = Vec3(rng.uniform(0.15, 0.95), rng.uniform(0.15, 0.95), rng.uniform(0.15, 0.95));
        const bool overlaps = std::any_of(scene.spheres.begin(), scene.spheres.end(), [&](const Sphere &o) {
            return (o.center - s.center).norm() <= o.radius + s.radius + 0.02;
        });
        if (!overlaps) {
            scene.spheres.push_back(s);
        }
    }
    return scene;
}

} // namespace

void SceneSpec::validate() const {
    for (std::size_t i = 0; i < spheres.size(); ++i) {
        const Sphere &s = spheres[i];
        if (!(s.radius > 0.0) || !s.center.allFinite()) {
            throw InvalidArgument("sphere " + std::to_string(i) + ": radius must be positive");
        }
        if (!unit_rgb(s.albedo)) {
            throw InvalidArgument("sphere " + std::to_string(i) + ": albedo outside [0,1]");
        }
    }
    if (!unit_rgb(background)) {
        throw InvalidArgument("scene background outside [0,1]");
    }
    if (!(ambient >= 0.0 && ambient <= 1.0)) {
        throw InvalidArgument("scene ambient must lie in [0,1]");
    }
    if (!(std::abs(light_direction.norm() - 1.0) < 1e-9)) {
        throw InvalidArgument("scene light_direction must be a unit vector");
    }
}

std::optional<SurfaceHit> trace(const SceneSpec &scene, const Ray &ray) {
    std::optional<SurfaceHit> best;
    double best_t = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < scene.spheres.size(); ++i) {
        const Sphere &s = scene.spheres[i];
        const Vec3 oc = ray.origin - s.center;
        const double b = ray.direction.dot(oc);
        const double c = oc.squaredNorm() - s.radius * s.radius;
        const double disc = b * b - c;
        if (disc < 0.0) {
            continue;
        }
        const double root = std::sqrt(disc);
        double t = -b - root;
        if (t <= kHitEpsilon) {
            t = -b + root;
        }
        if (t <= kHitEpsilon || t >= best_t) {
            continue;
        }
        best_t = t;
        SurfaceHit hit;
        hit.distance = t;
        hit.point = ray.origin + t * ray.direction;
        hit.normal = (hit.point - s.center) / s.radius;
        if (c < 0.0) {
            hit.normal = -hit.normal; // seen from inside
        }
        hit.sphere = i;
        best = hit;
    }
    return best;
}

Vec3 shade(const SceneSpec &scene, const SurfaceHit &hit) {
    const double lambert = std::max(0.0, hit.normal.dot(scene.light_direction));
    return scene.spheres[hit.sphere].albedo * (scene.ambient + (1.0 - scene.ambient) * lambert);
}

Vec3 radiance(const SceneSpec &scene, const Ray &ray) {
    const auto hit = trace(scene, ray);
    return hit ? shade(scene, *hit) : scene.background;
}

Image render_scene(const SceneSpec &scene, const Pose &pose, const Intrinsics &intrinsics) {
    Image image(intrinsics.width, intrinsics.height);
    for (int y = 0; y < intrinsics.height; ++y) {
        for (int x = 0; x < intrinsics.width; ++x) {
            const Vec3 rgb = radiance(scene, pixel_ray(pose, intrinsics, x + 0.5, y + 0.5));
            for (int c = 0; c < 3; ++c) {
                image.at(x, y, c) = std::clamp(rgb[c], 0.0, 1.0);
            }
        }
    }
    return image;
}

const std::vector<std::string> &scene_preset_names() {
    static const std::vector<std::string> names{"single_sphere", "cluster", "room"};
    return names;
}

SceneSpec preset_scene(std::string_view name, std::uint64_t seed) {
    if (name == "single_sphere") {
        SceneSpec scene;
        scene.spheres.push_back({Vec3::Zero(), 1.0, Vec3(0.85, 0.45, 0.25), false});
        scene.background = Vec3(0.1, 0.1, 0.12);
        scene.ambient = 0.25;
        scene.light_direction = kDefaultLight;
        return scene;
    }
    if (name == "cluster") {
        return make_cluster(seed);
    }
    if (name == "room") {
        SceneSpec scene = make_cluster(seed);
        scene.spheres.push_back({Vec3::Zero(), 4.0, Vec3(0.7, 0.68, 0.62), true});
        return scene;
    }
    std::string valid;
    for (const auto &n : scene_preset_names()) {
        valid += (valid.empty() ? "" : ", ") + n;
    }
    throw InvalidArgument("unknown scene preset '" + std::string(name) + "'; valid presets: " + valid);
}

} // namespace viewforge
