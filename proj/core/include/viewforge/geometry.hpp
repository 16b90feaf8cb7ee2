// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "viewforge/image.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <string_view>
#include <vector>

namespace viewforge {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Camera convention used throughout: right-handed, the camera looks along +z,
/// x points right and y points down in the image, so a camera-frame point
/// (X, Y, Z) projects to u = fx*X/Z + cx, v = fy*Y/Z + cy. World up is +y.
inline const Vec3 kWorldUp{0.0, 1.0, 0.0};

/// Rigid camera-to-world transform. `translation` is the camera centre in world
/// coordinates; the columns of `rotation` are the camera axes in world coordinates.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static Pose identity() { return {}; }

    /// Composition: (a * b) applies b first, then a.
    Pose operator*(const Pose &other) const {
        return {rotation * other.rotation, rotation * other.translation + translation};
    }

    Pose inverse() const {
        const Mat3 rt = rotation.transpose();
        return {rt, -rt * translation};
    }

    Vec3 apply(const Vec3 &point) const { return rotation * point + translation; }

    const Vec3 &center() const { return translation; }
    Vec3 right() const { return rotation.col(0); }
    Vec3 down() const { return rotation.col(1); }
    Vec3 forward() const { return rotation.col(2); }

    /// Orthonormal with determinant +1 within `tol` (max-abs norm of RᵀR - I).
    bool is_valid(double tol = 1e-9) const;
};

/// Pinhole intrinsics in pixel units.
struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    /// Throws InvalidArgument when focal lengths, principal point or size are out of range.
    void validate() const;

    /// Square-pixel intrinsics with the principal point at the image centre.
    static Intrinsics from_fov(int width, int height, double horizontal_fov_degrees);

    bool operator==(const Intrinsics &) const = default;
};

enum class ViewKind { observed, anchor, generated };

std::string_view to_string(ViewKind kind);
ViewKind view_kind_from_string(std::string_view name);

/// A posed RGB image.
struct View {
    Image image;
    Pose pose;
    Intrinsics intrinsics;
    ViewKind kind = ViewKind::observed;

    /// Throws when the image does not match the intrinsics or holds values outside [0,1].
    void validate() const;
};

struct Ray {
    Vec3 origin;
    Vec3 direction; ///< unit length
};

/// Per-cell ray origins and unit directions expressed in a reference camera frame.
/// Cells are stored row-major, `width()` = image width / divisor.
struct Raymap {
    int width = 0;
    int height = 0;
    int resolution_divisor = 1;
    std::vector<Vec3> origins;
    std::vector<Vec3> directions;

    const Vec3 &origin(int x, int y) const { return origins[static_cast<std::size_t>(y) * width + x]; }
    const Vec3 &direction(int x, int y) const { return directions[static_cast<std::size_t>(y) * width + x]; }
};

/// reference⁻¹ ∘ target: the target camera expressed in the reference camera frame.
Pose relative_pose(const Pose &target, const Pose &reference);

/// Unit camera-frame direction through continuous pixel coordinate (u, v).
Vec3 camera_direction(const Intrinsics &intrinsics, double u, double v);

/// World-space ray through continuous pixel coordinate (u, v). Pixel centres sit
/// at half-integer coordinates.
Ray pixel_ray(const Pose &pose, const Intrinsics &intrinsics, double u, double v);

/// Projects a world point; empty when the point is not in front of the camera.
std::optional<Vec2> project(const Pose &pose, const Intrinsics &intrinsics, const Vec3 &world);

/// Raymap of `camera` relative to `reference`, one ray per divisor×divisor block
/// through the block centre. Throws DimensionError if the divisor does not split
/// the image exactly.
Raymap compute_raymap(const Pose &camera, const Intrinsics &intrinsics, const Pose &reference,
                      int resolution_divisor = 8);

enum class SquareMode { center_crop, pad_to_square };

/// Fill value for padded regions.
inline constexpr double kPadValue = 0.5;

View square_crop_and_pad(const View &view, SquareMode mode);

/// Camera at `eye` looking at `target`. `up_hint` is the world up direction;
/// throws InvalidArgument when eye and target coincide, and falls back to a
/// perpendicular hint when the view direction is parallel to `up_hint`.
Pose look_at(const Vec3 &eye, const Vec3 &target, const Vec3 &up_hint = kWorldUp);

/// Projects an arbitrary 3×3 matrix onto the nearest rotation (SVD).
Mat3 nearest_rotation(const Mat3 &m);

} // namespace viewforge
