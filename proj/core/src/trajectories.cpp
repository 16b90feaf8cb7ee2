// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/trajectories.hpp"

#include "viewforge/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace viewforge {

namespace {

void require_count(int n, int minimum, const char *what) {
    if (n < minimum) {
        throw InvalidArgument(std::string(what) + ": need at least " + std::to_string(minimum) +
                              " views, got " + std::to_string(n));
    }
}

Vec3 centroid(const std::vector<Pose> &poses) {
    Vec3 c = Vec3::Zero();
    for (const Pose &p : poses) {
        c += p.translation;
    }
    return c / static_cast<double>(poses.size());
}

Vec3 catmull_rom(const Vec3 &p0, const Vec3 &p1, const Vec3 &p2, const Vec3 &p3, double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return 0.5 * (2.0 * p1 + (p2 - p0) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                  (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3);
}

// Log-spaced factors spanning [0.5, 2].
std::vector<double> log_spaced_scales(int count) {
    if (count == 1) {
        return {1.0};
    }
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        out.push_back(0.5 * std::pow(4.0, static_cast<double>(i) / (count - 1)));
    }
    return out;
}

std::vector<double> symmetric_offsets(int count, double step) {
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        out.push_back((i - 0.5 * (count - 1)) * step);
    }
    return out;
}

void append(std::vector<Pose> &dst, const std::vector<Pose> &src) {
    dst.insert(dst.end(), src.begin(), src.end());
}

} // namespace

std::vector<Pose> orbit_path(const Vec3 &center, double radius, double height, int n) {
    require_count(n, 1, "orbit_path");
    if (radius == 0.0 && height == 0.0) {
        throw InvalidArgument("orbit_path: camera would coincide with the look-at target");
    }
    if (!(radius > 0.0)) {
        throw InvalidArgument("orbit_path: radius must be positive");
    }
    std::vector<Pose> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double azimuth = 2.0 * M_PI * i / n;
        const Vec3 eye = center + Vec3(radius * std::cos(azimuth), height, radius * std::sin(azimuth));
        out.push_back(look_at(eye, center));
    }
    return out;
}

std::vector<Pose> forward_circle_path(const std::vector<Pose> &fit_views, double scale, double z_offset,
                                      int n) {
    require_count(static_cast<int>(fit_views.size()), 2, "forward_circle_path fit set");
    require_count(n, 1, "forward_circle_path");
    Mat3 rotation_sum = Mat3::Zero();
    for (const Pose &p : fit_views) {
        rotation_sum += p.rotation;
    }
    const Mat3 mean_rotation = nearest_rotation(rotation_sum);
    const Vec3 axis = mean_rotation.col(2);
    const Vec3 c = centroid(fit_views);

    double mean_dist = 0.0;
    for (const Pose &p : fit_views) {
        const Vec3 d = p.translation - c;
        mean_dist += (d - d.dot(axis) * axis).norm();
    }
    mean_dist /= static_cast<double>(fit_views.size());
    const double radius = scale * mean_dist;

    const Vec3 u = mean_rotation.col(0);
    const Vec3 v = axis.cross(u);
    std::vector<Pose> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double theta = 2.0 * M_PI * i / n;
        Pose p;
        p.rotation = mean_rotation;
        p.translation = c + z_offset * axis + radius * (std::cos(theta) * u + std::sin(theta) * v);
        out.push_back(p);
    }
    return out;
}

std::vector<Pose> spline_path(const std::vector<Pose> &control, const Vec2 &lateral_offset, int n) {
    require_count(static_cast<int>(control.size()), 2, "spline_path control set");
    require_count(n, 1, "spline_path");
    const int k = static_cast<int>(control.size());
    const Vec3 shift = lateral_offset.x() * control.front().right() + lateral_offset.y() * control.front().forward();
    auto point = [&](int i) -> const Vec3 & { return control[std::clamp(i, 0, k - 1)].translation; };

    std::vector<Pose> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double u = n == 1 ? 0.0 : static_cast<double>(k - 1) * i / (n - 1);
        const int seg = std::min(static_cast<int>(std::floor(u)), k - 2);
        const double t = u - seg;
        Pose p;
        if (t == 0.0) {
            p = control[seg];
        } else if (t == 1.0) {
            p = control[seg + 1];
        } else {
            p.translation = catmull_rom(point(seg - 1), point(seg), point(seg + 1), point(seg + 2), t);
            const Eigen::Quaterniond qa(control[seg].rotation);
            const Eigen::Quaterniond qb(control[seg + 1].rotation);
            p.rotation = qa.slerp(t, qb).normalized().toRotationMatrix();
        }
        p.translation += shift;
        out.push_back(p);
    }
    return out;
}

std::vector<Pose> spiral_cylinder_path(double radius, double height_start, double height_end, double turns,
                                       const Vec3 &center, int n, bool round_trip) {
    if (!(radius > 0.0)) {
        throw InvalidArgument("spiral_cylinder_path: radius must be positive");
    }
    require_count(n, 2, "spiral_cylinder_path");
    std::vector<Pose> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / (n - 1);
        const double progress = round_trip ? 1.0 - std::abs(2.0 * s - 1.0) : s;
        const double height = height_start + (height_end - height_start) * progress;
        const double azimuth = 2.0 * M_PI * turns * s;
        const Vec3 axis_point = center + Vec3(0.0, height, 0.0);
        const Vec3 eye = axis_point + Vec3(radius * std::cos(azimuth), 0.0, radius * std::sin(azimuth));
        out.push_back(look_at(eye, axis_point));
    }
    return out;
}

std::string_view to_string(PathFamily family) {
    switch (family) {
    case PathFamily::orbit:
        return "orbit";
    case PathFamily::forward_circle:
        return "forward_circle";
    case PathFamily::spline:
        return "spline";
    case PathFamily::spiral_cylinder:
        return "spiral_cylinder";
    }
    return "unknown";
}

PathFamily path_family_from_string(std::string_view name) {
    if (name == "orbit") return PathFamily::orbit;
    if (name == "forward_circle") return PathFamily::forward_circle;
    if (name == "spline") return PathFamily::spline;
    if (name == "spiral_cylinder") return PathFamily::spiral_cylinder;
    throw InvalidArgument("unknown path family '" + std::string(name) +
                          "'; valid families: orbit, forward_circle, spline, spiral_cylinder");
}

void PathSpec::validate() const {
    if (n_views < 1) {
        throw InvalidArgument("path n_views must be at least 1");
    }
    if (!(scale > 0.0)) {
        throw InvalidArgument("path scale must be positive");
    }
}

std::vector<Pose> generate_path(const PathSpec &spec, const std::vector<Pose> &fit) {
    spec.validate();
    switch (spec.family) {
    case PathFamily::orbit:
        return orbit_path(spec.center, spec.scale, spec.height_offset, spec.n_views);
    case PathFamily::forward_circle:
        return forward_circle_path(fit, spec.scale, spec.height_offset, spec.n_views);
    case PathFamily::spline: {
        const auto &control = spec.control.empty() ? fit : spec.control;
        return spline_path(scale_about_centroid(control, spec.scale), spec.lateral_offset, spec.n_views);
    }
    case PathFamily::spiral_cylinder:
        return spiral_cylinder_path(spec.scale, spec.height_range.x(), spec.height_range.y(), spec.turns,
                                    spec.center, spec.n_views, spec.round_trip);
    }
    throw InvalidArgument("unhandled path family");
}

OrbitFit fit_orbit(const std::vector<Pose> &poses) {
    if (poses.empty()) {
        throw InvalidArgument("fit_orbit: no poses to fit");
    }
    OrbitFit fit;
    bool solved = false;
    if (poses.size() >= 2) {
        Mat3 a = Mat3::Zero();
        Vec3 b = Vec3::Zero();
        for (const Pose &p : poses) {
            const Vec3 f = p.forward();
            const Mat3 proj = Mat3::Identity() - f * f.transpose();
            a += proj;
            b += proj * p.translation;
        }
        Eigen::SelfAdjointEigenSolver<Mat3> eig(a);
        if (eig.eigenvalues().minCoeff() > 1e-6 * static_cast<double>(poses.size())) {
            fit.target = a.ldlt().solve(b);
            solved = true;
        }
    }
    if (!solved) {
        Vec3 f = Vec3::Zero();
        for (const Pose &p : poses) {
            f += p.forward();
        }
        f.normalize();
        const Vec3 c = centroid(poses);
        const double along = -c.dot(f);
        fit.target = c + (along > 1e-6 ? along : 1.0) * f;
    }
    for (const Pose &p : poses) {
        const Vec3 d = p.translation - fit.target;
        fit.radius += std::hypot(d.x(), d.z());
        fit.height += d.y();
        fit.reach += d.norm();
    }
    const auto count = static_cast<double>(poses.size());
    fit.radius /= count;
    fit.height /= count;
    fit.reach /= count;
    return fit;
}

std::vector<Pose> scale_about_centroid(const std::vector<Pose> &poses, double factor) {
    if (poses.empty()) {
        return {};
    }
    const Vec3 c = centroid(poses);
    std::vector<Pose> out = poses;
    for (Pose &p : out) {
        p.translation = c + factor * (p.translation - c);
    }
    return out;
}

const std::vector<std::string> &dataset_preset_names() {
    static const std::vector<std::string> names{"single_forward", "single_orbit", "re10k", "llff",
                                                "dtu",            "co3d",         "mip360"};
    return names;
}

std::string_view to_string(DatasetPreset preset) {
    return dataset_preset_names()[static_cast<std::size_t>(preset)];
}

DatasetPreset dataset_preset_from_string(std::string_view name) {
    const auto &names = dataset_preset_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) {
            return static_cast<DatasetPreset>(i);
        }
    }
    std::string valid;
    for (const auto &n : names) {
        valid += (valid.empty() ? "" : ", ") + n;
    }
    throw InvalidArgument("unknown trajectory preset '" + std::string(name) + "'; valid presets: " + valid);
}

std::vector<Pose> dataset_preset(DatasetPreset kind, const std::vector<Pose> &input_poses) {
    if (input_poses.empty()) {
        throw InvalidArgument("dataset_preset: at least one input pose is required");
    }
    constexpr int n = kViewsPerVariant;
    const OrbitFit fit = fit_orbit(input_poses);
    const double step = 0.1 * (fit.reach > 0.0 ? fit.reach : 1.0);
    std::vector<Pose> out;

    switch (kind) {
    case DatasetPreset::single_forward:
        append(out, spiral_cylinder_path(fit.radius, fit.height - 2.0 * step, fit.height + 2.0 * step, 2.0,
                                         fit.target, n, true));
        break;
    case DatasetPreset::single_orbit:
        append(out, orbit_path(fit.target, fit.radius, fit.height, n));
        break;
    case DatasetPreset::re10k:
        for (double dz : symmetric_offsets(2, step)) {
            for (double dx : symmetric_offsets(5, step)) {
                append(out, spline_path(input_poses, Vec2(dx, dz), n));
            }
        }
        break;
    case DatasetPreset::llff:
        for (double z : symmetric_offsets(3, step)) {
            for (double s : log_spaced_scales(4)) {
                append(out, forward_circle_path(input_poses, s, z, n));
            }
        }
        break;
    case DatasetPreset::dtu:
        for (double z : symmetric_offsets(2, step)) {
            for (double s : log_spaced_scales(3)) {
                append(out, forward_circle_path(input_poses, s, z, n));
            }
        }
        break;
    case DatasetPreset::co3d:
        for (double s : log_spaced_scales(8)) {
            append(out, spline_path(scale_about_centroid(input_poses, s), Vec2::Zero(), n));
        }
        break;
    case DatasetPreset::mip360:
        for (double h : symmetric_offsets(3, step)) {
            for (double s : log_spaced_scales(3)) {
                append(out, orbit_path(fit.target, s * fit.radius, fit.height + h, n));
            }
        }
        break;
    }
    return out;
}

std::vector<std::size_t> validate_path(const std::vector<Pose> &path, const SceneSpec &scene) {
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < path.size(); ++i) {
        const Vec3 &c = path[i].translation;
        const bool blocked = std::any_of(scene.spheres.begin(), scene.spheres.end(), [&](const Sphere &s) {
            const double d = (c - s.center).norm();
            return s.shell ? d > s.radius : d < s.radius;
        });
        if (blocked) {
            bad.push_back(i);
        }
    }
    return bad;
}

} // namespace viewforge
