// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/geometry.hpp"

#include "viewforge/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace viewforge {

bool Pose::is_valid(double tol) const {
    if (!rotation.allFinite() || !translation.allFinite()) {
        return false;
    }
    const double orth = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    return orth < tol && rotation.determinant() > 0.0;
}

void Intrinsics::validate() const {
    if (width <= 0 || height <= 0) {
        throw InvalidArgument("intrinsics: width and height must be positive");
    }
    if (!(fx > 0.0) || !(fy > 0.0)) {
        throw InvalidArgument("intrinsics: focal lengths must be positive");
    }
    if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
        throw InvalidArgument("intrinsics: principal point (" + std::to_string(cx) + ", " +
                              std::to_string(cy) + ") outside the image");
    }
}

Intrinsics Intrinsics::from_fov(int width, int height, double horizontal_fov_degrees) {
    const double half = horizontal_fov_degrees * M_PI / 360.0;
    const double f = 0.5 * width / std::tan(half);
    Intrinsics k{f, f, 0.5 * width, 0.5 * height, width, height};
    k.validate();
    return k;
}

std::string_view to_string(ViewKind kind) {
    switch (kind) {
    case ViewKind::observed:
        return "observed";
    case ViewKind::anchor:
        return "anchor";
    case ViewKind::generated:
        return "generated";
    }
    return "unknown";
}

ViewKind view_kind_from_string(std::string_view name) {
    if (name == "observed") return ViewKind::observed;
    if (name == "anchor") return ViewKind::anchor;
    if (name == "generated") return ViewKind::generated;
    throw InvalidArgument("unknown view kind '" + std::string(name) +
                          "' (expected observed, anchor or generated)");
}

void View::validate() const {
    intrinsics.validate();
    if (image.width() != intrinsics.width || image.height() != intrinsics.height) {
        throw DimensionError("view image is " + std::to_string(image.width()) + "x" +
                             std::to_string(image.height()) + " but intrinsics declare " +
                             std::to_string(intrinsics.width) + "x" + std::to_string(intrinsics.height));
    }
    if (!image.in_unit_range()) {
        throw InvalidArgument("view image holds values outside [0,1]");
    }
    if (!pose.is_valid(1e-6)) {
        throw InvalidArgument("view pose rotation is not orthonormal");
    }
}

Pose relative_pose(const Pose &target, const Pose &reference) {
    return reference.inverse() * target;
}

Vec3 camera_direction(const Intrinsics &k, double u, double v) {
    return Vec3((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0).normalized();
}

Ray pixel_ray(const Pose &pose, const Intrinsics &intrinsics, double u, double v) {
    return {pose.translation, pose.rotation * camera_direction(intrinsics, u, v)};
}

std::optional<Vec2> project(const Pose &pose, const Intrinsics &k, const Vec3 &world) {
    const Vec3 cam = pose.rotation.transpose() * (world - pose.translation);
    if (cam.z() <= 0.0) {
        return std::nullopt;
    }
    return Vec2(k.fx * cam.x() / cam.z() + k.cx, k.fy * cam.y() / cam.z() + k.cy);
}

Raymap compute_raymap(const Pose &camera, const Intrinsics &intrinsics, const Pose &reference,
                      int resolution_divisor) {
    if (resolution_divisor <= 0) {
        throw InvalidArgument("raymap resolution divisor must be positive");
    }
    if (intrinsics.width % resolution_divisor != 0 || intrinsics.height % resolution_divisor != 0) {
        throw DimensionError("image " + std::to_string(intrinsics.width) + "x" +
                             std::to_string(intrinsics.height) + " is not divisible by raymap divisor " +
                             std::to_string(resolution_divisor));
    }
    const Pose rel = relative_pose(camera, reference);
    Raymap map;
    map.resolution_divisor = resolution_divisor;
    map.width = intrinsics.width / resolution_divisor;
    map.height = intrinsics.height / resolution_divisor;
    const std::size_t cells = static_cast<std::size_t>(map.width) * map.height;
    map.origins.assign(cells, rel.translation);
    map.directions.resize(cells);
    for (int y = 0; y < map.height; ++y) {
        const double v = (y + 0.5) * resolution_divisor;
        for (int x = 0; x < map.width; ++x) {
            const double u = (x + 0.5) * resolution_divisor;
            map.directions[static_cast<std::size_t>(y) * map.width + x] =
                (rel.rotation * camera_direction(intrinsics, u, v)).normalized();
        }
    }
    return map;
}

View square_crop_and_pad(const View &view, SquareMode mode) {
    const int w = view.image.width();
    const int h = view.image.height();
    if (w == h) {
        return view;
    }
    View out = view;
    if (mode == SquareMode::center_crop) {
        const int side = std::min(w, h);
        const int x0 = (w - side) / 2;
        const int y0 = (h - side) / 2;
        out.image = Image(side, side);
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                for (int c = 0; c < 3; ++c) {
                    out.image.at(x, y, c) = view.image.at(x + x0, y + y0, c);
                }
            }
        }
        out.intrinsics.cx -= x0;
        out.intrinsics.cy -= y0;
    } else {
        const int side = std::max(w, h);
        const int x0 = (side - w) / 2;
        const int y0 = (side - h) / 2;
        out.image = Image(side, side, kPadValue);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    out.image.at(x + x0, y + y0, c) = view.image.at(x, y, c);
                }
            }
        }
        out.intrinsics.cx += x0;
        out.intrinsics.cy += y0;
    }
    out.intrinsics.width = out.image.width();
    out.intrinsics.height = out.image.height();
    return out;
}

Pose look_at(const Vec3 &eye, const Vec3 &target, const Vec3 &up_hint) {
    const Vec3 delta = target - eye;
    const double dist = delta.norm();
    if (!(dist > 1e-12)) {
        throw InvalidArgument("look_at: camera position coincides with the look-at target");
    }
    const Vec3 forward = delta / dist;
    Vec3 right = forward.cross(up_hint);
    if (right.norm() < 1e-9) {
        // Looking straight along the hint; pick the world axis least aligned with it.
        Eigen::Index axis = 0;
        up_hint.cwiseAbs().minCoeff(&axis);
        right = forward.cross(Vec3::Unit(axis));
    }
    right.normalize();
    const Vec3 down = forward.cross(right);
    Pose pose;
    pose.rotation.col(0) = right;
    pose.rotation.col(1) = down;
    pose.rotation.col(2) = forward;
    pose.translation = eye;
    return pose;
}

Mat3 nearest_rotation(const Mat3 &m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return svd.matrixU() * d * svd.matrixV().transpose();
}

} // namespace viewforge
